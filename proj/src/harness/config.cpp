#include "safebo/harness/config.hpp"

#include "safebo/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace safebo::harness {

std::string_view to_string(ExperimentKind kind) {
    switch (kind) {
        case ExperimentKind::BoundAudit: return "bound_audit";
        case ExperimentKind::SafeOptComparison: return "safeopt_comparison";
        case ExperimentKind::LosGpUcbBench: return "los_gp_ucb_bench";
    }
    return "unknown";
}

NoiseModel NoiseParams::model() const {
    if (kind == Kind::Uniform) return UniformBounded{scale};
    return GaussianUnbounded{scale};
}

BetaSchedule ScheduleParams::resolve(const FunctionParams& fn, const NoiseParams& noise) const {
    if (!rkhs) return ConstantHeuristic{constant};
    return RkhsNormBound{B.value_or(fn.rkhs_norm), R.value_or(noise.scale), delta};
}

std::vector<int> ExperimentConfig::grid_counts() const {
    if (grid_points.size() == 1) return std::vector<int>(static_cast<std::size_t>(function.dimension), grid_points[0]);
    return grid_points;
}

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (num_functions < 1) fail("experiment.num_functions must be >= 1");
    if (num_seeds < 1) fail("experiment.num_seeds must be >= 1");
    if (budget < 1) fail("experiment.budget must be >= 1");
    if (function.dimension < 1) fail("function.dimension must be >= 1");
    if (function.lower.size() != function.dimension || function.upper.size() != function.dimension) {
        fail("function.lower/upper must have one entry per dimension");
    }
    if (!(function.lower.array() < function.upper.array()).all()) fail("function.lower must be below function.upper");
    function.kernel.check_dimension(function.dimension);
    if (function.centers < 1) fail("function.centers must be >= 1");
    if (!(function.rkhs_norm > 0.0)) fail("function.rkhs_norm must be positive");
    if (!(function.misspecification >= 1.0)) fail("function.misspecification must be >= 1 (1 = well-specified)");
    if (!(function.safe_quantile >= 0.0 && function.safe_quantile < 1.0)) fail("function.safe_quantile must be in [0, 1)");
    if (!(function.seed_margin >= 0.0)) fail("function.seed_margin must be non-negative");
    if (function.lipschitz_resolution < 2) fail("function.lipschitz_resolution must be >= 2");
    if (!(noise.scale >= 0.0)) fail("noise.scale must be non-negative");
    const auto counts = grid_counts();
    if (static_cast<int>(counts.size()) != function.dimension) fail("grid.points must have 1 or dimension entries");
    for (int c : counts) {
        if (c < 2) fail("grid.points must be >= 2");
    }
    if (kind == ExperimentKind::BoundAudit) {
        if (audit.schedules.empty()) fail("bound_audit needs at least one [schedule.*] section");
        if (audit.data_points < 1) fail("audit.data_points must be >= 1");
        if (audit.grid_points < 2) fail("audit.grid_points must be >= 2");
        if (!(audit.lambda > 0.0)) fail("audit.lambda must be positive");
    } else {
        if (algorithms.empty()) fail("experiment needs at least one [algorithm.*] section");
    }
    for (const auto& s : audit.schedules) {
        if (s.rkhs && !(s.delta > 0.0 && s.delta < 1.0)) fail("schedule." + s.name + ".delta must be in (0, 1)");
        if (!s.rkhs && !(s.constant > 0.0)) fail("schedule." + s.name + ".beta must be positive");
    }
    for (const auto& a : algorithms) {
        const std::string where = "algorithm." + a.name;
        if (kind == ExperimentKind::LosGpUcbBench && a.variant != AlgorithmVariant::LoSGpUcb) {
            fail(where + ": los_gp_ucb_bench only runs variant los_gp_ucb");
        }
        if (kind == ExperimentKind::SafeOptComparison && a.variant == AlgorithmVariant::LoSGpUcb) {
            fail(where + ": variant los_gp_ucb belongs in a los_gp_ucb_bench experiment");
        }
        if (!(a.lambda > 0.0)) fail(where + ".lambda must be positive");
        if (a.lipschitz && !(*a.lipschitz > 0.0)) fail(where + ".lipschitz must be positive");
        if (a.noise_bound && !(*a.noise_bound >= 0.0)) fail(where + ".noise_bound must be non-negative");
        if (a.schedule.rkhs && !(a.schedule.delta > 0.0 && a.schedule.delta < 1.0)) fail(where + ".delta must be in (0, 1)");
        if (!a.schedule.rkhs && !(a.schedule.constant > 0.0)) fail(where + ".beta must be positive");
        if (a.multistart.num_starts < 1 || a.multistart.max_iters < 1 || !(a.multistart.step_init > 0.0)) {
            fail(where + ": multistart options must be positive");
        }
        if (!(a.seed_radius >= 0.0)) fail(where + ".seed_radius must be non-negative");
    }
}

namespace {

struct Entry {
    std::string key;
    std::string value;
    int line = 0;
};

struct Section {
    std::string name;
    int line = 0;
    std::vector<Entry> entries;
};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(int line, const std::string& msg) const {
        throw ConfigError(fmt::format("{}:{}: {}", source_, line, msg));
    }

    double number(const Entry& e) const {
        const char* begin = e.value.c_str();
        char* end = nullptr;
        errno = 0;
        const double v = std::strtod(begin, &end);
        if (end == begin || *end != '\0' || errno == ERANGE) fail(e.line, "'" + e.key + "' expects a number, got '" + e.value + "'");
        return v;
    }

    long long integer(const Entry& e) const {
        const char* begin = e.value.c_str();
        char* end = nullptr;
        errno = 0;
        const long long v = std::strtoll(begin, &end, 10);
        if (end == begin || *end != '\0' || errno == ERANGE) fail(e.line, "'" + e.key + "' expects an integer, got '" + e.value + "'");
        return v;
    }

    std::vector<double> numbers(const Entry& e) const {
        std::vector<double> out;
        std::stringstream ss(e.value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            Entry sub{e.key, trim(item), e.line};
            out.push_back(number(sub));
        }
        if (out.empty()) fail(e.line, "'" + e.key + "' expects a comma-separated list of numbers");
        return out;
    }

    bool boolean(const Entry& e) const {
        if (e.value == "true" || e.value == "1") return true;
        if (e.value == "false" || e.value == "0") return false;
        fail(e.line, "'" + e.key + "' expects true or false");
    }

    const std::string& source() const { return source_; }

private:
    std::string source_;
};

std::vector<Section> split_sections(const std::string& text, const Reader& reader) {
    std::vector<Section> sections;
    std::set<std::string> seen;
    std::istringstream is(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        const auto hash = raw.find_first_of("#;");
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') reader.fail(line_no, "unterminated section header");
            Section s{trim(line.substr(1, line.size() - 2)), line_no, {}};
            if (s.name.empty()) reader.fail(line_no, "empty section name");
            if (!seen.insert(s.name).second) reader.fail(line_no, "duplicate section [" + s.name + "]");
            sections.push_back(std::move(s));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) reader.fail(line_no, "expected 'key = value'");
        if (sections.empty()) reader.fail(line_no, "key outside of any section");
        Entry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
        if (e.key.empty()) reader.fail(line_no, "missing key");
        if (e.value.empty()) reader.fail(line_no, "missing value for '" + e.key + "'");
        for (const auto& prev : sections.back().entries) {
            if (prev.key == e.key) reader.fail(line_no, "duplicate key '" + e.key + "'");
        }
        sections.back().entries.push_back(std::move(e));
    }
    return sections;
}

using Handler = std::function<void(const Entry&)>;

void apply(const Section& section, const std::map<std::string, Handler>& handlers, const Reader& reader) {
    for (const auto& e : section.entries) {
        const auto it = handlers.find(e.key);
        if (it == handlers.end()) reader.fail(e.line, "unknown key '" + e.key + "' in [" + section.name + "]");
        try {
            it->second(e);
        } catch (const ArgumentError& err) {
            reader.fail(e.line, err.what());
        }
    }
}

void schedule_handlers(std::map<std::string, Handler>& h, ScheduleParams& s, const Reader& r) {
    h["beta"] = [&s, &r](const Entry& e) {
        if (e.value == "rkhs") {
            s.rkhs = true;
        } else {
            s.rkhs = false;
            s.constant = r.number(e);
        }
    };
    h["rkhs_norm"] = [&s, &r](const Entry& e) { s.B = r.number(e); };
    h["noise_scale"] = [&s, &r](const Entry& e) { s.R = r.number(e); };
    h["delta"] = [&s, &r](const Entry& e) { s.delta = r.number(e); };
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text, const std::string& source) {
    Reader r(source);
    const auto sections = split_sections(text, r);
    ExperimentConfig cfg;

    std::vector<double> lower{0.0}, upper{1.0}, lengthscale{0.1};
    double signal_variance = 1.0;
    KernelFamily family = KernelFamily::SquaredExponential;
    bool have_experiment = false;

    for (const auto& sec : sections) {
        std::map<std::string, Handler> h;
        if (sec.name == "experiment") {
            have_experiment = true;
            h["kind"] = [&](const Entry& e) {
                if (e.value == "bound_audit") cfg.kind = ExperimentKind::BoundAudit;
                else if (e.value == "safeopt_comparison") cfg.kind = ExperimentKind::SafeOptComparison;
                else if (e.value == "los_gp_ucb_bench") cfg.kind = ExperimentKind::LosGpUcbBench;
                else r.fail(e.line, "unknown experiment kind '" + e.value + "'");
            };
            h["num_functions"] = [&](const Entry& e) { cfg.num_functions = static_cast<int>(r.integer(e)); };
            h["num_seeds"] = [&](const Entry& e) { cfg.num_seeds = static_cast<int>(r.integer(e)); };
            h["budget"] = [&](const Entry& e) { cfg.budget = static_cast<int>(r.integer(e)); };
            h["master_seed"] = [&](const Entry& e) {
                const auto v = r.integer(e);
                if (v < 0) r.fail(e.line, "master_seed must be non-negative");
                cfg.master_seed = static_cast<std::uint64_t>(v);
            };
            h["output"] = [&](const Entry& e) { cfg.output = e.value; };
            h["assert_safety"] = [&](const Entry& e) { cfg.assert_safety = r.boolean(e); };
        } else if (sec.name == "function") {
            h["dimension"] = [&](const Entry& e) { cfg.function.dimension = static_cast<int>(r.integer(e)); };
            h["lower"] = [&](const Entry& e) { lower = r.numbers(e); };
            h["upper"] = [&](const Entry& e) { upper = r.numbers(e); };
            h["kernel"] = [&](const Entry& e) { family = parse_kernel_family(e.value); };
            h["lengthscale"] = [&](const Entry& e) { lengthscale = r.numbers(e); };
            h["signal_variance"] = [&](const Entry& e) { signal_variance = r.number(e); };
            h["centers"] = [&](const Entry& e) { cfg.function.centers = static_cast<int>(r.integer(e)); };
            h["rkhs_norm"] = [&](const Entry& e) { cfg.function.rkhs_norm = r.number(e); };
            h["misspecification"] = [&](const Entry& e) { cfg.function.misspecification = r.number(e); };
            h["safe_quantile"] = [&](const Entry& e) { cfg.function.safe_quantile = r.number(e); };
            h["seed_margin"] = [&](const Entry& e) { cfg.function.seed_margin = r.number(e); };
            h["lipschitz_resolution"] = [&](const Entry& e) {
                cfg.function.lipschitz_resolution = static_cast<int>(r.integer(e));
            };
        } else if (sec.name == "noise") {
            h["kind"] = [&](const Entry& e) {
                if (e.value == "uniform") cfg.noise.kind = NoiseParams::Kind::Uniform;
                else if (e.value == "gaussian") cfg.noise.kind = NoiseParams::Kind::Gaussian;
                else r.fail(e.line, "unknown noise kind '" + e.value + "'");
            };
            h["scale"] = [&](const Entry& e) { cfg.noise.scale = r.number(e); };
        } else if (sec.name == "grid") {
            h["points"] = [&](const Entry& e) {
                cfg.grid_points.clear();
                for (double v : r.numbers(e)) cfg.grid_points.push_back(static_cast<int>(v));
            };
        } else if (sec.name == "audit") {
            h["data_points"] = [&](const Entry& e) { cfg.audit.data_points = static_cast<int>(r.integer(e)); };
            h["grid_points"] = [&](const Entry& e) { cfg.audit.grid_points = static_cast<int>(r.integer(e)); };
            h["lambda"] = [&](const Entry& e) { cfg.audit.lambda = r.number(e); };
        } else if (sec.name.rfind("schedule.", 0) == 0) {
            ScheduleParams s;
            s.name = sec.name.substr(9);
            if (s.name.empty()) r.fail(sec.line, "schedule section needs a name");
            schedule_handlers(h, s, r);
            apply(sec, h, r);
            cfg.audit.schedules.push_back(std::move(s));
            continue;
        } else if (sec.name.rfind("algorithm.", 0) == 0) {
            AlgorithmParams a;
            a.name = sec.name.substr(10);
            if (a.name.empty()) r.fail(sec.line, "algorithm section needs a name");
            schedule_handlers(h, a.schedule, r);
            h["variant"] = [&](const Entry& e) { a.variant = parse_algorithm_variant(e.value); };
            h["lambda"] = [&](const Entry& e) { a.lambda = r.number(e); };
            h["lipschitz"] = [&](const Entry& e) {
                if (e.value == "oracle") a.lipschitz.reset();
                else a.lipschitz = r.number(e);
            };
            h["noise_bound"] = [&](const Entry& e) { a.noise_bound = r.number(e); };
            h["num_starts"] = [&](const Entry& e) { a.multistart.num_starts = static_cast<int>(r.integer(e)); };
            h["max_iters"] = [&](const Entry& e) { a.multistart.max_iters = static_cast<int>(r.integer(e)); };
            h["step_init"] = [&](const Entry& e) { a.multistart.step_init = r.number(e); };
            h["seed_radius"] = [&](const Entry& e) { a.seed_radius = r.number(e); };
            apply(sec, h, r);
            a.schedule.name = a.name;
            cfg.algorithms.push_back(std::move(a));
            continue;
        } else {
            r.fail(sec.line, "unknown section [" + sec.name + "]");
        }
        apply(sec, h, r);
    }
    if (!have_experiment) throw ConfigError(r.source() + ": missing [experiment] section");

    const auto d = static_cast<std::size_t>(cfg.function.dimension);
    auto broadcast = [d](std::vector<double> v) {
        if (v.size() == 1 && d > 1) v.assign(d, v[0]);
        return v;
    };
    lower = broadcast(lower);
    upper = broadcast(upper);
    try {
        cfg.function.lower = to_vector(lower);
        cfg.function.upper = to_vector(upper);
        cfg.function.kernel = KernelSpec(family, to_vector(lengthscale), signal_variance);
    } catch (const ArgumentError& err) {
        throw ConfigError(r.source() + ": [function] " + err.what());
    }
    try {
        cfg.validate();
    } catch (const ConfigError& err) {
        throw ConfigError(r.source() + ": " + err.what());
    } catch (const ArgumentError& err) {
        throw ConfigError(r.source() + ": " + err.what());
    }
    return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path.string());
}

namespace {

std::string join(const Eigen::VectorXd& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) out += fmt::format("{}{:.17g}", i ? ", " : "", v[i]);
    return out;
}

void dump_schedule(std::ostringstream& os, const ScheduleParams& s) {
    if (s.rkhs) {
        os << "beta = rkhs\n";
        if (s.B) os << fmt::format("rkhs_norm = {:.17g}\n", *s.B);
        if (s.R) os << fmt::format("noise_scale = {:.17g}\n", *s.R);
        os << fmt::format("delta = {:.17g}\n", s.delta);
    } else {
        os << fmt::format("beta = {:.17g}\n", s.constant);
    }
}

}  // namespace

std::string dump_config(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "[experiment]\n"
       << "kind = " << to_string(c.kind) << '\n'
       << "num_functions = " << c.num_functions << '\n'
       << "num_seeds = " << c.num_seeds << '\n'
       << "budget = " << c.budget << '\n'
       << "master_seed = " << c.master_seed << '\n'
       << "output = " << c.output << '\n'
       << "assert_safety = " << (c.assert_safety ? "true" : "false") << "\n\n";
    const auto& f = c.function;
    os << "[function]\n"
       << "dimension = " << f.dimension << '\n'
       << "lower = " << join(f.lower) << '\n'
       << "upper = " << join(f.upper) << '\n'
       << "kernel = " << to_string(f.kernel.family()) << '\n'
       << "lengthscale = " << join(f.kernel.lengthscale()) << '\n'
       << fmt::format("signal_variance = {:.17g}\n", f.kernel.signal_variance())
       << "centers = " << f.centers << '\n'
       << fmt::format("rkhs_norm = {:.17g}\n", f.rkhs_norm)
       << fmt::format("misspecification = {:.17g}\n", f.misspecification)
       << fmt::format("safe_quantile = {:.17g}\n", f.safe_quantile)
       << fmt::format("seed_margin = {:.17g}\n", f.seed_margin)
       << "lipschitz_resolution = " << f.lipschitz_resolution << "\n\n";
    os << "[noise]\n"
       << "kind = " << (c.noise.kind == NoiseParams::Kind::Uniform ? "uniform" : "gaussian") << '\n'
       << fmt::format("scale = {:.17g}\n\n", c.noise.scale);
    os << "[grid]\npoints = ";
    for (std::size_t i = 0; i < c.grid_points.size(); ++i) os << (i ? ", " : "") << c.grid_points[i];
    os << "\n";
    if (c.kind == ExperimentKind::BoundAudit) {
        os << "\n[audit]\n"
           << "data_points = " << c.audit.data_points << '\n'
           << "grid_points = " << c.audit.grid_points << '\n'
           << fmt::format("lambda = {:.17g}\n", c.audit.lambda);
        for (const auto& s : c.audit.schedules) {
            os << "\n[schedule." << s.name << "]\n";
            dump_schedule(os, s);
        }
    }
    for (const auto& a : c.algorithms) {
        os << "\n[algorithm." << a.name << "]\n"
           << "variant = " << to_string(a.variant) << '\n';
        dump_schedule(os, a.schedule);
        os << fmt::format("lambda = {:.17g}\n", a.lambda);
        if (a.lipschitz) os << fmt::format("lipschitz = {:.17g}\n", *a.lipschitz);
        else os << "lipschitz = oracle\n";
        if (a.noise_bound) os << fmt::format("noise_bound = {:.17g}\n", *a.noise_bound);
        if (a.variant == AlgorithmVariant::LoSGpUcb) {
            os << "num_starts = " << a.multistart.num_starts << '\n'
               << "max_iters = " << a.multistart.max_iters << '\n'
               << fmt::format("step_init = {:.17g}\n", a.multistart.step_init)
               << fmt::format("seed_radius = {:.17g}\n", a.seed_radius);
        }
    }
    return os.str();
}

}  // namespace safebo::harness
