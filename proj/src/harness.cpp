#include "kmpc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "kmpc/errors.hpp"
#include "kmpc/text_io.hpp"

namespace kmpc::harness {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr const char* kConfigHeader = "# kmpc-config v1";
constexpr int kMaxAttempts = 16;

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_scalar(const std::string& key, const std::string& value) {
    std::istringstream in(value);
    T out{};
    if (!(in >> out)) {
        throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
    }
    std::string rest;
    if (in >> rest) {
        throw ConfigError("config key '" + key + "': unexpected trailing '" + rest + "'");
    }
    return out;
}

std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::string text = value;
    std::replace(text.begin(), text.end(), ',', ' ');
    std::istringstream in(text);
    std::vector<double> out;
    std::string token;
    while (in >> token) {
        out.push_back(parse_scalar<double>(key, token));
    }
    if (out.empty()) {
        throw ConfigError("config key '" + key + "' needs at least one value");
    }
    return out;
}

std::string join(const std::vector<double>& v) {
    std::ostringstream out;
    out << std::setprecision(17);
    for (std::size_t i = 0; i < v.size(); ++i) {
        out << (i ? " " : "") << v[i];
    }
    return out.str();
}

// Uniform double in [0, 1) from the top 53 bits of one draw.
double unit_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t trajectory, int attempt) {
    std::uint64_t s = seed ^ trajectory;
    if (attempt > 0) {
        s ^= 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(attempt);
    }
    return s;
}

int resolve_threads(int requested, int jobs) {
    int t = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    return std::clamp(t, 1, std::max(jobs, 1));
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    bool header_seen = false;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (!header_seen) {
            if (t.empty()) {
                continue;
            }
            if (t != kConfigHeader) {
                throw ConfigError("config must start with '" + std::string(kConfigHeader) + "'");
            }
            header_seen = true;
            continue;
        }
        if (t.empty() || t.front() == '#') {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(t.substr(0, eq));
        const std::string value = trim(t.substr(eq + 1));

        if (key == "nodes") {
            cfg.plant.nodes = parse_scalar<int>(key, value);
        } else if (key == "dt") {
            cfg.plant.dt = parse_scalar<double>(key, value);
        } else if (key == "substeps") {
            cfg.plant.substeps = parse_scalar<int>(key, value);
        } else if (key == "actuator_centers") {
            cfg.plant.actuator_centers = parse_list(key, value);
        } else if (key == "actuator_width") {
            cfg.plant.actuator_width = parse_scalar<double>(key, value);
        } else if (key == "n_trajectories") {
            cfg.n_trajectories = parse_scalar<int>(key, value);
        } else if (key == "samples_per_trajectory") {
            cfg.samples_per_trajectory = parse_scalar<int>(key, value);
        } else if (key == "seed") {
            cfg.seed = parse_scalar<std::uint64_t>(key, value);
        } else if (key == "data_input_min") {
            cfg.data_input_min = parse_scalar<double>(key, value);
        } else if (key == "data_input_max") {
            cfg.data_input_max = parse_scalar<double>(key, value);
        } else if (key == "threads") {
            cfg.threads = parse_scalar<int>(key, value);
        } else if (key == "horizon") {
            cfg.horizon = parse_scalar<int>(key, value);
        } else if (key == "state_weight") {
            cfg.state_weight = parse_scalar<double>(key, value);
        } else if (key == "terminal_weight") {
            cfg.terminal_weight = parse_scalar<double>(key, value);
        } else if (key == "input_weight") {
            cfg.input_weight = parse_scalar<double>(key, value);
        } else if (key == "input_min") {
            cfg.input_min = parse_scalar<double>(key, value);
        } else if (key == "input_max") {
            cfg.input_max = parse_scalar<double>(key, value);
        } else if (key == "epsilon") {
            cfg.epsilon = parse_scalar<double>(key, value);
        } else if (key == "reference_values") {
            cfg.reference_values = parse_list(key, value);
        } else if (key == "simulation_time") {
            cfg.simulation_time = parse_scalar<double>(key, value);
        } else if (key == "initial_coefficients") {
            cfg.initial_coefficients = parse_list(key, value);
        } else if (key == "flop_rate") {
            cfg.flop_rate = parse_scalar<double>(key, value);
        } else if (key == "output_dir") {
            if (value.empty()) {
                throw ConfigError("config key 'output_dir' is empty");
            }
            cfg.output_dir = value;
        } else {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
    if (!header_seen) {
        throw ConfigError("config must start with '" + std::string(kConfigHeader) + "'");
    }
    cfg.validate();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
    }
    return parse(text);
}

std::string ExperimentConfig::to_text() const {
    std::ostringstream out;
    out << std::setprecision(17);
    out << kConfigHeader << '\n';
    out << "nodes = " << plant.nodes << '\n';
    out << "dt = " << plant.dt << '\n';
    out << "substeps = " << plant.substeps << '\n';
    out << "actuator_centers = " << join(plant.actuator_centers) << '\n';
    out << "actuator_width = " << plant.actuator_width << '\n';
    out << "n_trajectories = " << n_trajectories << '\n';
    out << "samples_per_trajectory = " << samples_per_trajectory << '\n';
    out << "seed = " << seed << '\n';
    out << "data_input_min = " << data_input_min << '\n';
    out << "data_input_max = " << data_input_max << '\n';
    out << "threads = " << threads << '\n';
    out << "horizon = " << horizon << '\n';
    out << "state_weight = " << state_weight << '\n';
    out << "terminal_weight = " << terminal_weight << '\n';
    out << "input_weight = " << input_weight << '\n';
    out << "input_min = " << input_min << '\n';
    out << "input_max = " << input_max << '\n';
    out << "epsilon = " << epsilon << '\n';
    out << "reference_values = " << join(reference_values) << '\n';
    out << "simulation_time = " << simulation_time << '\n';
    out << "initial_coefficients = " << join(initial_coefficients) << '\n';
    out << "flop_rate = " << flop_rate << '\n';
    out << "output_dir = " << output_dir.string() << '\n';
    return out.str();
}

void ExperimentConfig::validate() const {
    plant.validate();
    if (n_trajectories < 1 || samples_per_trajectory < 1) {
        throw ConfigError("n_trajectories and samples_per_trajectory must be positive");
    }
    if (!(data_input_min < data_input_max) || !std::isfinite(data_input_min) ||
        !std::isfinite(data_input_max)) {
        throw ConfigError("data_input_min must be below data_input_max");
    }
    if (threads < 0) {
        throw ConfigError("threads must be nonnegative");
    }
    if (horizon < 1) {
        throw ConfigError("horizon must be at least 1");
    }
    if (!(state_weight >= 0.0) || !(terminal_weight >= 0.0) || !(input_weight > 0.0)) {
        throw ConfigError("state/terminal weights must be >= 0 and input_weight > 0");
    }
    if (!(input_min < input_max) || !std::isfinite(input_min) || !std::isfinite(input_max)) {
        throw ConfigError("input_min must be below input_max");
    }
    if (!(epsilon > 0.0)) {
        throw ConfigError("epsilon must be positive");
    }
    if (reference_values.empty()) {
        throw ConfigError("reference_values must not be empty");
    }
    for (double r : reference_values) {
        if (!std::isfinite(r)) {
            throw ConfigError("reference_values must be finite");
        }
    }
    if (!(simulation_time > 0.0) || !std::isfinite(simulation_time)) {
        throw ConfigError("simulation_time must be positive");
    }
    if (initial_coefficients.size() != 4) {
        throw ConfigError("initial_coefficients needs exactly 4 values");
    }
    if (!(flop_rate > 0.0)) {
        throw ConfigError("flop_rate must be positive");
    }
    const int steps = simulation_steps();
    if (steps < static_cast<int>(reference_values.size())) {
        throw ConfigError("simulation is shorter than the reference schedule");
    }
}

int ExperimentConfig::simulation_steps() const {
    return static_cast<int>(std::llround(simulation_time / plant.dt));
}

int ExperimentConfig::segment_of(int step) const {
    const auto segments = static_cast<long long>(reference_values.size());
    const long long s = static_cast<long long>(step) * segments / simulation_steps();
    return static_cast<int>(std::clamp(s, 0LL, segments - 1));
}

double ExperimentConfig::reference_at(int step) const {
    return reference_values[static_cast<std::size_t>(segment_of(step))];
}

koopman::SnapshotDataset generate_dataset(const ExperimentConfig& cfg, GenerationStats* stats) {
    cfg.validate();
    const int T = cfg.n_trajectories;
    const int K = cfg.samples_per_trajectory;
    const int M = cfg.plant.nodes;
    const int m = cfg.n_inputs();
    const Eigen::Index total = static_cast<Eigen::Index>(T) * K;

    koopman::SnapshotDataset data{MatrixXd(M, total), MatrixXd(m, total), MatrixXd(M, total)};
    std::atomic<int> next{0};
    std::atomic<int> discarded{0};
    std::mutex error_mutex;
    std::exception_ptr failure;

    auto worker = [&] {
        kdv::KdvPlant plant(cfg.plant);
        VectorXd coeffs(4);
        VectorXd u(m);
        for (int t = next.fetch_add(1); t < T; t = next.fetch_add(1)) {
            const Eigen::Index col0 = static_cast<Eigen::Index>(t) * K;
            bool done = false;
            for (int attempt = 0; attempt < kMaxAttempts && !done; ++attempt) {
                std::mt19937_64 rng(stream_seed(cfg.seed, static_cast<std::uint64_t>(t), attempt));
                for (int i = 0; i < 4; ++i) {
                    coeffs(i) = unit_uniform(rng);
                }
                VectorXd y = plant.initial_profile(coeffs);
                try {
                    for (int k = 0; k < K; ++k) {
                        for (int i = 0; i < m; ++i) {
                            u(i) = cfg.data_input_min +
                                   (cfg.data_input_max - cfg.data_input_min) * unit_uniform(rng);
                        }
                        VectorXd yn = plant.step(y, u);
                        data.X.col(col0 + k) = y;
                        data.U.col(col0 + k) = u;
                        data.X_plus.col(col0 + k) = yn;
                        y = std::move(yn);
                    }
                    done = true;
                } catch (const PlantInstability&) {
                    discarded.fetch_add(1);
                }
            }
            if (!done) {
                std::lock_guard lock(error_mutex);
                if (!failure) {
                    failure = std::make_exception_ptr(PlantInstability(
                        "trajectory " + std::to_string(t) + " diverged on every attempt", 0));
                }
                return;
            }
        }
    };

    const int n_threads = resolve_threads(cfg.threads, T);
    if (n_threads == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int i = 0; i < n_threads; ++i) {
            pool.emplace_back(worker);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    if (stats) {
        stats->discarded_trajectories = discarded.load();
    }
    return data;
}

koopman::LiftedPredictor fit_experiment_predictor(const koopman::SnapshotDataset& data) {
    data.validate();
    return koopman::identify(data, koopman::ObservableMap::shifted_quadratic(data.n_x()),
                             koopman::OutputFit::identity_projection);
}

mpc::MpcWeights experiment_weights(const ExperimentConfig& cfg) {
    const int M = cfg.plant.nodes;
    const int m = cfg.n_inputs();
    mpc::MpcWeights w;
    w.horizon = cfg.horizon;
    w.W_x = cfg.state_weight * MatrixXd::Identity(M, M);
    w.W_N = cfg.terminal_weight * MatrixXd::Identity(M, M);
    w.W_u = cfg.input_weight * MatrixXd::Identity(m, m);
    return w;
}

mpc::InputScaling experiment_scaling(const ExperimentConfig& cfg) {
    const int m = cfg.n_inputs();
    return mpc::InputScaling::from_bounds(VectorXd::Constant(m, cfg.input_min),
                                          VectorXd::Constant(m, cfg.input_max));
}

mpc::CertificateDims experiment_dims(const ExperimentConfig& cfg) {
    const auto obs = koopman::ObservableMap::shifted_quadratic(cfg.plant.nodes);
    mpc::CertificateDims d;
    d.n_u = cfg.n_inputs();
    d.n_x = cfg.plant.nodes;
    d.n_psi = obs.n_psi();
    d.horizon = cfg.horizon;
    d.m_lifting = static_cast<std::int64_t>(obs.lifting_flops());
    return d;
}

const VectorXd& ClosedLoopLog::state_at(std::size_t k) const {
    if (k < steps.size()) {
        return steps[k].y;
    }
    if (k == steps.size()) {
        return final_state;
    }
    throw InvalidInput("closed-loop sample index out of range");
}

ClosedLoopLog run_closed_loop(const ExperimentConfig& cfg,
                              const koopman::LiftedPredictor& predictor,
                              const mpc::CondensedData& condensed,
                              const StepSink& sink) {
    cfg.validate();
    const int M = cfg.plant.nodes;
    if (predictor.n_x() != M || predictor.n_u() != cfg.n_inputs()) {
        throw ConfigError("predictor dimensions do not match the plant configuration");
    }
    boxqp::SolverConfig solver_cfg;
    solver_cfg.epsilon = cfg.epsilon;
    mpc::KoopmanMpc controller(predictor, condensed, solver_cfg);
    kdv::KdvPlant plant(cfg.plant);

    const VectorXd coeffs = Eigen::Map<const VectorXd>(cfg.initial_coefficients.data(), 4);
    VectorXd y = plant.initial_profile(coeffs);

    ClosedLoopLog log;
    log.dt = cfg.plant.dt;
    log.segments = static_cast<int>(cfg.reference_values.size());
    const int steps = cfg.simulation_steps();
    log.steps.reserve(static_cast<std::size_t>(steps));

    mpc::References refs{VectorXd(M), VectorXd::Zero(cfg.n_inputs())};
    for (int k = 0; k < steps; ++k) {
        const double r = cfg.reference_at(k);
        refs.x_r.setConstant(r);

        FlopCounter fc;
        const auto res = controller.step(y, refs, &fc);

        StepRecord rec;
        rec.time = k * cfg.plant.dt;
        rec.y = y;
        rec.u = res.u0;
        rec.reference = r;
        rec.iterations = res.solution.iterations;
        rec.duality_gap = res.solution.duality_gap;
        rec.flops = fc.count;
        if (sink) {
            sink(rec);
        }
        y = plant.step(y, res.u0);
        log.steps.push_back(std::move(rec));
    }
    log.final_state = y;
    return log;
}

Metrics compute_metrics(const ClosedLoopLog& log) {
    if (log.steps.empty() || log.final_state.size() == 0) {
        throw InvalidInput("closed-loop log is empty");
    }
    if (log.segments < 1) {
        throw InvalidInput("closed-loop log needs at least one segment");
    }
    const std::size_t K = log.steps.size();
    const auto S = static_cast<std::size_t>(log.segments);
    if (K < S) {
        throw InvalidInput("closed-loop log is shorter than its reference schedule");
    }
    auto mean_at = [&](std::size_t k) { return log.state_at(k).mean(); };

    Metrics out;
    for (std::size_t s = 0; s < S; ++s) {
        // samples measured while this segment's reference was in force
        const std::size_t begin = s * K / S;
        const std::size_t last = (s + 1) * K / S - 1;
        SegmentMetrics seg;
        seg.reference = log.steps[begin].reference;
        seg.start_time = begin * log.dt;
        seg.end_time = (last + 1) * log.dt;
        seg.terminal_error = std::abs(mean_at(last) - seg.reference);

        const double band = 0.05 * std::abs(seg.reference - mean_at(begin));
        std::optional<std::size_t> last_outside;
        for (std::size_t k = begin; k <= last; ++k) {
            if (std::abs(mean_at(k) - seg.reference) > band) {
                last_outside = k;
            }
        }
        if (!last_outside) {
            seg.settling_time = 0.0;
        } else if (*last_outside == last) {
            seg.settling_time = std::numeric_limits<double>::quiet_NaN();
        } else {
            seg.settling_time = (*last_outside + 1 - begin) * log.dt;
        }
        out.segments.push_back(seg);
    }

    for (const auto& r : log.steps) {
        out.max_abs_input = std::max(out.max_abs_input, r.u.size() ? r.u.cwiseAbs().maxCoeff() : 0.0);
        ++out.iteration_histogram[r.iterations];
        out.total_flops += r.flops;
        out.max_step_flops = std::max(out.max_step_flops, r.flops);
    }
    return out;
}

std::string Metrics::report() const {
    std::ostringstream out;
    out << std::setprecision(10);
    out << "# kmpc-metrics v1\n";
    for (std::size_t s = 0; s < segments.size(); ++s) {
        const auto& g = segments[s];
        out << "segment_" << s << " = reference " << g.reference << " start " << g.start_time
            << " end " << g.end_time << " terminal_error " << g.terminal_error << " settling_time "
            << g.settling_time << '\n';
    }
    out << "max_abs_input = " << max_abs_input << '\n';
    out << "iteration_histogram =";
    for (const auto& [iters, count] : iteration_histogram) {
        out << ' ' << iters << ':' << count;
    }
    out << '\n';
    out << "total_flops = " << total_flops << '\n';
    out << "max_step_flops = " << max_step_flops << '\n';
    return out.str();
}

ClosedLoopWriter::ClosedLoopWriter(std::ostream& trajectory, std::ostream& diagnostics, int n_x,
                                   int n_u)
    : trajectory_(trajectory), diagnostics_(diagnostics), n_u_(n_u) {
    trajectory_ << std::setprecision(17) << 't';
    for (int i = 1; i <= n_x; ++i) {
        trajectory_ << ",y" << i;
    }
    for (int i = 1; i <= n_u; ++i) {
        trajectory_ << ",u" << i;
    }
    trajectory_ << '\n';
    diagnostics_ << std::setprecision(17) << "step,t,reference,iterations,duality_gap,flops\n";
}

void ClosedLoopWriter::write(const StepRecord& r) {
    trajectory_ << r.time;
    for (Eigen::Index i = 0; i < r.y.size(); ++i) {
        trajectory_ << ',' << r.y(i);
    }
    for (Eigen::Index i = 0; i < r.u.size(); ++i) {
        trajectory_ << ',' << r.u(i);
    }
    trajectory_ << '\n';
    diagnostics_ << count_ << ',' << r.time << ',' << r.reference << ',' << r.iterations << ','
                 << r.duality_gap << ',' << r.flops << '\n';
    ++count_;
    trajectory_.flush();
    diagnostics_.flush();
}

void ClosedLoopWriter::finish(double time, const VectorXd& final_state) {
    trajectory_ << time;
    for (Eigen::Index i = 0; i < final_state.size(); ++i) {
        trajectory_ << ',' << final_state(i);
    }
    for (int i = 0; i < n_u_; ++i) {
        trajectory_ << ",nan";
    }
    trajectory_ << '\n';
    trajectory_.flush();
}

void write_trajectory_csv(std::ostream& out, const ClosedLoopLog& log) {
    std::ostringstream sink;
    const int n_x = static_cast<int>(log.final_state.size());
    const int n_u = log.steps.empty() ? 0 : static_cast<int>(log.steps.front().u.size());
    ClosedLoopWriter w(out, sink, n_x, n_u);
    for (const auto& r : log.steps) {
        w.write(r);
    }
    w.finish(static_cast<double>(log.steps.size()) * log.dt, log.final_state);
}

void write_diagnostics_csv(std::ostream& out, const ClosedLoopLog& log) {
    std::ostringstream sink;
    ClosedLoopWriter w(sink, out, 0, 0);
    for (const auto& r : log.steps) {
        w.write(r);
    }
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        out.push_back(trim(field));
    }
    return out;
}

double to_double(const std::string& s) {
    if (s == "nan") {
        return std::numeric_limits<double>::quiet_NaN();
    }
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw InvalidInput("cannot parse number '" + s + "'");
    }
    if (pos != s.size()) {
        throw InvalidInput("cannot parse number '" + s + "'");
    }
    return v;
}

}  // namespace

ClosedLoopLog read_closed_loop(std::istream& trajectory, std::istream& diagnostics, int segments) {
    std::string line;
    if (!std::getline(trajectory, line)) {
        throw InvalidInput("trajectory file is empty");
    }
    const auto header = split_csv(line);
    int n_x = 0;
    int n_u = 0;
    for (std::size_t i = 1; i < header.size(); ++i) {
        if (!header[i].empty() && header[i][0] == 'y') {
            ++n_x;
        } else if (!header[i].empty() && header[i][0] == 'u') {
            ++n_u;
        }
    }
    if (header.empty() || header[0] != "t" || n_x == 0 ||
        static_cast<std::size_t>(1 + n_x + n_u) != header.size()) {
        throw InvalidInput("trajectory header must be t,y1..yM,u1..un");
    }

    std::vector<std::vector<double>> rows;
    while (std::getline(trajectory, line)) {
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_csv(line);
        if (fields.size() != header.size()) {
            throw InvalidInput("trajectory row has " + std::to_string(fields.size()) +
                               " fields, expected " + std::to_string(header.size()));
        }
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) {
            row.push_back(to_double(f));
        }
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2) {
        throw InvalidInput("trajectory file needs at least one step and a final state");
    }

    ClosedLoopLog log;
    log.segments = segments;
    log.dt = rows[1][0] - rows[0][0];
    for (std::size_t k = 0; k + 1 < rows.size(); ++k) {
        StepRecord r;
        r.time = rows[k][0];
        r.y = Eigen::Map<const VectorXd>(rows[k].data() + 1, n_x);
        r.u = Eigen::Map<const VectorXd>(rows[k].data() + 1 + n_x, n_u);
        log.steps.push_back(std::move(r));
    }
    log.final_state = Eigen::Map<const VectorXd>(rows.back().data() + 1, n_x);

    if (!std::getline(diagnostics, line) || split_csv(line).size() != 6) {
        throw InvalidInput("diagnostics header must be step,t,reference,iterations,duality_gap,flops");
    }
    std::size_t k = 0;
    while (std::getline(diagnostics, line)) {
        if (trim(line).empty()) {
            continue;
        }
        const auto f = split_csv(line);
        if (f.size() != 6 || k >= log.steps.size()) {
            throw InvalidInput("diagnostics file does not match the trajectory file");
        }
        auto& r = log.steps[k++];
        r.reference = to_double(f[2]);
        r.iterations = static_cast<int>(to_double(f[3]));
        r.duality_gap = to_double(f[4]);
        r.flops = static_cast<std::uint64_t>(std::stoull(f[5]));
    }
    if (k != log.steps.size()) {
        throw InvalidInput("diagnostics file has " + std::to_string(k) + " rows, trajectory has " +
                           std::to_string(log.steps.size()));
    }
    return log;
}

}  // namespace kmpc::harness
