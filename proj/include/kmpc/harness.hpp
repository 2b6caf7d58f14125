#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "kmpc/condensed_mpc.hpp"
#include "kmpc/kdv.hpp"
#include "kmpc/koopman.hpp"

namespace kmpc::harness {

/// Settings of the KdV tracking experiment. Serialized as a key = value text
/// file whose first line is "# kmpc-config v1".
struct ExperimentConfig {
    kdv::KdvConfig plant;

    // data generation
    int n_trajectories = 1000;
    int samples_per_trajectory = 200;
    std::uint64_t seed = 1;
    double data_input_min = -1.0;
    double data_input_max = 1.0;
    int threads = 0;  ///< 0 picks std::thread::hardware_concurrency()

    // controller
    int horizon = 10;
    double state_weight = 1.0;     ///< W_x = state_weight * I
    double terminal_weight = 1.0;  ///< W_N = terminal_weight * I
    double input_weight = 0.01;    ///< W_u = input_weight * I
    double input_min = -1.0;
    double input_max = 1.0;
    double epsilon = 1e-6;

    // closed loop
    std::vector<double> reference_values = {0.5, 0.25, 0.0, 0.75};
    double simulation_time = 50.0;
    std::vector<double> initial_coefficients = {0.0, 0.0, 0.0, 0.0};

    double flop_rate = 1e9;
    std::filesystem::path output_dir = "kmpc_out";

    /// Throws ConfigError on unknown keys, malformed values or a bad header.
    static ExperimentConfig parse(const std::string& text);
    static ExperimentConfig load(const std::filesystem::path& path);
    std::string to_text() const;

    void validate() const;

    int simulation_steps() const;
    int n_inputs() const { return plant.n_inputs(); }
    /// Reference value in force during closed-loop step k: the schedule is
    /// split into equal-length segments, one per reference value.
    double reference_at(int step) const;
    int segment_of(int step) const;
};

struct GenerationStats {
    int discarded_trajectories = 0;
};

/// Simulates n_trajectories open-loop runs of samples_per_trajectory
/// transitions each. Trajectory t draws from its own stream seeded with
/// seed ^ t, so the result does not depend on the thread count. A trajectory
/// whose integration blows up is discarded and redrawn from a fresh stream.
koopman::SnapshotDataset generate_dataset(const ExperimentConfig& cfg,
                                          GenerationStats* stats = nullptr);

/// EDMD with the [x; 1; x .* shift(x); x .* x] dictionary and C = [I, 0].
koopman::LiftedPredictor fit_experiment_predictor(const koopman::SnapshotDataset& data);

mpc::MpcWeights experiment_weights(const ExperimentConfig& cfg);
mpc::InputScaling experiment_scaling(const ExperimentConfig& cfg);
mpc::CertificateDims experiment_dims(const ExperimentConfig& cfg);

/// One closed-loop sample: the state measured at `time`, the input applied
/// over [time, time + dt) and the solver diagnostics of that step.
struct StepRecord {
    double time = 0.0;
    Eigen::VectorXd y;
    Eigen::VectorXd u;
    double reference = 0.0;
    int iterations = 0;
    double duality_gap = 0.0;
    std::uint64_t flops = 0;
};

struct ClosedLoopLog {
    double dt = 0.0;
    int segments = 1;
    std::vector<StepRecord> steps;
    Eigen::VectorXd final_state;

    /// State at sample k, k = 0..steps.size() (the last one is final_state).
    const Eigen::VectorXd& state_at(std::size_t k) const;
};

using StepSink = std::function<void(const StepRecord&)>;

/// Runs the receding-horizon loop for simulation_steps() steps. Each record
/// is passed to `sink` as soon as it is produced, so a caller writing to disk
/// keeps everything up to a failing step. Solver and plant errors propagate.
ClosedLoopLog run_closed_loop(const ExperimentConfig& cfg,
                              const koopman::LiftedPredictor& predictor,
                              const mpc::CondensedData& condensed,
                              const StepSink& sink = {});

struct SegmentMetrics {
    double reference = 0.0;
    double start_time = 0.0;
    double end_time = 0.0;
    double terminal_error = 0.0;  ///< |mean(y) - reference| at the last sample under this reference
    double settling_time = 0.0;   ///< NaN if the 5% band is never held
};

struct Metrics {
    std::vector<SegmentMetrics> segments;
    double max_abs_input = 0.0;
    std::map<int, int> iteration_histogram;
    std::uint64_t total_flops = 0;
    std::uint64_t max_step_flops = 0;

    std::string report() const;
};

/// Throws InvalidInput on an empty log.
Metrics compute_metrics(const ClosedLoopLog& log);

/// Rows "t,y1..yM,u1..un" for every step, then a final row with the last
/// state and nan inputs.
void write_trajectory_csv(std::ostream& out, const ClosedLoopLog& log);
/// Rows "step,t,reference,iterations,duality_gap,flops".
void write_diagnostics_csv(std::ostream& out, const ClosedLoopLog& log);
ClosedLoopLog read_closed_loop(std::istream& trajectory, std::istream& diagnostics, int segments);

/// Streams a log to the two CSV files as records arrive.
class ClosedLoopWriter {
public:
    ClosedLoopWriter(std::ostream& trajectory, std::ostream& diagnostics, int n_x, int n_u);
    void write(const StepRecord& r);
    void finish(double time, const Eigen::VectorXd& final_state);

private:
    std::ostream& trajectory_;
    std::ostream& diagnostics_;
    int n_u_;
    std::size_t count_ = 0;
};

}  // namespace kmpc::harness
