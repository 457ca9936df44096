#pragma once

#include "safebo/optimizers.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace safebo::harness {

/// Malformed or invalid experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ExperimentKind { BoundAudit, SafeOptComparison, LosGpUcbBench };

std::string_view to_string(ExperimentKind kind);

/// Ground-truth function family used to generate test problems.
struct FunctionParams {
    int dimension = 1;
    Eigen::VectorXd lower = Eigen::VectorXd::Zero(1);
    Eigen::VectorXd upper = Eigen::VectorXd::Ones(1);
    KernelSpec kernel = KernelSpec::isotropic(KernelFamily::SquaredExponential, 0.1, 1.0);
    int centers = 30;
    /// Norm bound B handed to the algorithms.
    double rkhs_norm = 2.0;
    /// True norm is misspecification * rkhs_norm; 1 means well-specified.
    double misspecification = 1.0;
    /// h is this quantile of f over the reference grid.
    double safe_quantile = 0.3;
    /// Seed points need f >= h + 2E + seed_margin * (max f - min f).
    double seed_margin = 0.05;
    int lipschitz_resolution = 10000;

    Box box() const { return Box(lower, upper); }
};

struct NoiseParams {
    enum class Kind { Uniform, Gaussian } kind = Kind::Uniform;
    /// E for uniform noise, standard deviation for Gaussian noise.
    double scale = 0.1;

    NoiseModel model() const;
};

/// Beta schedule as written in a config; unset B and R are filled from the
/// function's assumed norm and the noise scale.
struct ScheduleParams {
    std::string name;
    bool rkhs = false;
    double constant = 2.0;
    std::optional<double> B;
    std::optional<double> R;
    double delta = 0.05;

    BetaSchedule resolve(const FunctionParams& fn, const NoiseParams& noise) const;
};

struct AlgorithmParams {
    std::string name;
    AlgorithmVariant variant = AlgorithmVariant::LoSBO;
    ScheduleParams schedule;
    double lambda = 0.01;
    /// Unset means the per-function Lipschitz oracle.
    std::optional<double> lipschitz;
    /// Unset means the noise scale.
    std::optional<double> noise_bound;
    MultistartOptions multistart;
    double seed_radius = 0.0;
};

struct AuditParams {
    int data_points = 20;
    int grid_points = 1000;
    double lambda = 0.01;
    std::vector<ScheduleParams> schedules;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::SafeOptComparison;
    int num_functions = 1;
    int num_seeds = 1;
    int budget = 30;
    std::uint64_t master_seed = 0;
    std::string output = "out";
    /// Abort the batch if a Lipschitz-certified algorithm queries an unsafe point.
    bool assert_safety = true;
    FunctionParams function;
    NoiseParams noise;
    std::vector<int> grid_points{200};
    std::vector<AlgorithmParams> algorithms;
    AuditParams audit;

    std::vector<int> grid_counts() const;
    void validate() const;
};

ExperimentConfig parse_config_text(const std::string& text, const std::string& source = "<string>");
ExperimentConfig parse_config(const std::filesystem::path& path);

/// Normalized dump with every default filled in; parses back to the same config.
std::string dump_config(const ExperimentConfig& config);

}  // namespace safebo::harness
