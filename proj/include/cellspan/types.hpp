#ifndef CELLSPAN_TYPES_HPP
#define CELLSPAN_TYPES_HPP

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <stdexcept>
#include <string>
#include <vector>

namespace cellspan {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

enum class Region { anode, separator, cathode };

inline const char* region_name(Region r) {
    switch (r) {
    case Region::anode: return "anode";
    case Region::separator: return "separator";
    case Region::cathode: return "cathode";
    }
    return "?";
}

inline bool is_electrode(Region r) { return r != Region::separator; }

/// Configuration / input errors carrying a list of named violations.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<std::string> errors)
        : std::runtime_error(join(errors)), errors_(std::move(errors)) {}
    explicit ConfigError(const std::string& msg)
        : ConfigError(std::vector<std::string>{msg}) {}
    const std::vector<std::string>& errors() const { return errors_; }

private:
    static std::string join(const std::vector<std::string>& es) {
        std::string s;
        for (const auto& e : es) {
            if (!s.empty()) s += "; ";
            s += e;
        }
        return s;
    }
    std::vector<std::string> errors_;
};

/// Nonlinear or linear solve failure; carries the last residual seen.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& msg, double last_residual)
        : std::runtime_error(msg + " (last residual " + std::to_string(last_residual) + ")"),
          last_residual_(last_residual) {}
    explicit SolverError(const std::string& msg)
        : std::runtime_error(msg), last_residual_(-1.0) {}
    double last_residual() const { return last_residual_; }

private:
    double last_residual_;
};

} // namespace cellspan

#endif
