#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "maxscore/errors.hpp"
#include "maxscore/io.hpp"

namespace maxscore {

/// n observations of (X in R^d, Y in {0,1}).
struct Dataset {
    Eigen::MatrixXd x;   // n x d covariates
    Eigen::VectorXi y;   // binary responses

    Eigen::Index n() const { return x.rows(); }
    Eigen::Index dim() const { return x.cols(); }
};

/// Unit-norm direction in R^d; renormalized on construction.
class SphereVector {
  public:
    /// Degenerate 1-D placeholder, for slots that are assigned before use.
    SphereVector() : v_(Eigen::VectorXd::Ones(1)) {}

    explicit SphereVector(Eigen::VectorXd v) : v_(std::move(v)) {
        if (v_.size() == 0) throw DimensionMismatch("SphereVector: empty vector");
        const double norm = v_.norm();
        if (!std::isfinite(norm) || norm == 0.0) {
            throw DataError("SphereVector: cannot normalize a zero or non-finite vector");
        }
        v_ /= norm;
    }

    const Eigen::VectorXd& coords() const { return v_; }
    Eigen::Index dim() const { return v_.size(); }
    double operator[](Eigen::Index i) const { return v_[i]; }

    /// d^{-1/2}(1, ..., 1), the canonical diagonal direction.
    static SphereVector diagonal(Eigen::Index d) {
        return SphereVector(Eigen::VectorXd::Ones(d));
    }

  private:
    Eigen::VectorXd v_;
};

struct ValidationReport {
    std::vector<std::string> violations;
    bool ok() const { return violations.empty(); }
};

/// Report-only check of the estimation entry preconditions: binary responses,
/// finite covariates, dimension at least 2. Duplicates are allowed.
inline ValidationReport validate_dataset(const Dataset& data) {
    ValidationReport report;
    if (data.dim() < 2) {
        report.violations.push_back("dimension must be >= 2");
    }
    if (data.y.size() != data.n()) {
        report.violations.push_back("response length does not match row count");
    }
    for (Eigen::Index i = 0; i < data.y.size(); ++i) {
        if (data.y[i] != 0 && data.y[i] != 1) {
            report.violations.push_back("non-binary response at row " + format_int(i));
        }
    }
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        for (Eigen::Index j = 0; j < data.dim(); ++j) {
            if (!std::isfinite(data.x(i, j))) {
                report.violations.push_back("non-finite covariate at row " + format_int(i));
                break;
            }
        }
    }
    return report;
}

/// Writes the `x1,...,xd,y` CSV layout; doubles use round-trip formatting.
inline void write_dataset_csv(std::ostream& os, const Dataset& data) {
    for (Eigen::Index j = 0; j < data.dim(); ++j) {
        os << 'x' << (j + 1) << ',';
    }
    os << "y\n";
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        for (Eigen::Index j = 0; j < data.dim(); ++j) {
            os << format_double(data.x(i, j)) << ',';
        }
        os << data.y[i] << '\n';
    }
}

inline void write_dataset_csv(const std::string& path, const Dataset& data) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError("cannot open for writing: " + path);
    write_dataset_csv(os, data);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (!line.empty() && line.back() == ',') fields.emplace_back();
    return fields;
}

/// Reads the `x1,...,xd,y` CSV layout. Structural problems (bad header, ragged
/// rows, unparseable numbers) throw; value-level violations such as a
/// non-binary y are left to validate_dataset.
inline Dataset read_dataset_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw DataError("dataset CSV: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header.back() != "y") {
        throw DataError("dataset CSV: header must be x1,...,xd,y");
    }
    const Eigen::Index d = static_cast<Eigen::Index>(header.size()) - 1;
    for (Eigen::Index j = 0; j < d; ++j) {
        if (header[j] != "x" + format_int(j + 1)) {
            throw DataError("dataset CSV: header must be x1,...,xd,y");
        }
    }
    std::vector<std::vector<double>> rows;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = split_csv_line(line);
        if (static_cast<Eigen::Index>(fields.size()) != d + 1) {
            throw DataError("dataset CSV: row " + format_int(rows.size() + 1) +
                            " has wrong field count");
        }
        std::vector<double> row(d + 1);
        for (Eigen::Index j = 0; j <= d; ++j) {
            if (!parse_double(fields[j], row[j])) {
                throw DataError("dataset CSV: unparseable number in row " +
                                format_int(rows.size() + 1));
            }
        }
        rows.push_back(std::move(row));
    }
    Dataset data;
    data.x.resize(static_cast<Eigen::Index>(rows.size()), d);
    data.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (Eigen::Index j = 0; j < d; ++j) data.x(static_cast<Eigen::Index>(i), j) = rows[i][j];
        const double yv = rows[i][d];
        // anything but an exact 0 or 1 is stored as a sentinel so that
        // validate_dataset reports it as non-binary
        data.y[static_cast<Eigen::Index>(i)] = (yv == 0.0) ? 0 : (yv == 1.0) ? 1 : 2;
    }
    return data;
}

inline Dataset read_dataset_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError("cannot open dataset: " + path);
    return read_dataset_csv(is);
}

}  // namespace maxscore
