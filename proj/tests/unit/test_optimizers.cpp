#include "safebo/errors.hpp"
#include "safebo/optimizers.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace safebo;
using testing::DenseOracle;

namespace {

const KernelSpec kKernel = KernelSpec::isotropic(KernelFamily::SquaredExponential, 0.1, 1.0);

Point p1(double v) { return Point::Constant(1, v); }

struct Instance {
    RkhsFunction f;
    std::shared_ptr<const GridDomain> grid;
    double h = 0.0;
    double L = 0.0;
    std::size_t seed = 0;
};

// h at the 30% quantile, seed at the first grid point with margin >= 0.3 above h.
Instance make_instance(std::uint64_t seed, int n = 100) {
    auto f = sample_rkhs_function(kKernel, Box::unit(1), 20, 2.0, seed);
    auto grid = std::make_shared<GridDomain>(Box::unit(1), std::vector<int>{n});
    std::vector<double> v;
    for (const auto& x : grid->points()) v.push_back(f(x));
    auto sorted = v;
    std::sort(sorted.begin(), sorted.end());
    const double h = sorted[static_cast<std::size_t>(0.3 * (n - 1))];
    std::size_t s = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] >= h + 0.3) {
            s = i;
            break;
        }
    }
    const double L = lipschitz_oracle(f, Box::unit(1), 10000);
    return {std::move(f), std::move(grid), h, L, s};
}

AlgorithmConfig base_config(AlgorithmVariant v, const Instance& inst, double E) {
    AlgorithmConfig c;
    c.variant = v;
    c.kernel = kKernel;
    c.lambda = 0.01;
    c.schedule = ConstantHeuristic{2.0};
    c.safety = LipschitzSafetyModel(inst.L, E);
    c.h = inst.h;
    c.budget = 30;
    c.rng_seed = 77;
    return c;
}

SafeProblem grid_problem(const Instance& inst) {
    SafeProblem p;
    p.box = Box::unit(1);
    p.grid = inst.grid;
    p.seed_indices = {inst.seed};
    p.seed_points = {(*inst.grid)[inst.seed]};
    return p;
}

// Straightforward re-implementation of the discrete SafeOpt-family loop with
// dense solves and explicit double loops.
std::vector<std::size_t> reference_run(const AlgorithmConfig& c, const Instance& inst, std::vector<double> noise) {
    const auto& g = *inst.grid;
    const std::size_t n = g.size();
    std::vector<char> safe(n, 0);
    safe[inst.seed] = 1;
    Dataset data(g.box());
    std::vector<std::size_t> picks;
    const bool lip = uses_lipschitz_safety(c.variant);
    for (std::size_t t = 0; t < noise.size(); ++t) {
        DenseOracle o(c.kernel, data, c.lambda);
        double beta = 0.0;
        if (const auto* h = std::get_if<ConstantHeuristic>(&c.schedule)) {
            beta = h->c;
        } else {
            const auto& r = std::get<RkhsNormBound>(c.schedule);
            beta = r.B + r.R / std::sqrt(c.lambda) * std::sqrt(o.logdet(c.lambda) - 2.0 * std::log(r.delta));
        }
        std::vector<double> lo(n), up(n);
        for (std::size_t i = 0; i < n; ++i) {
            const double s = std::sqrt(std::max(o.variance(g[i]), 0.0));
            lo[i] = o.mean(g[i]) - beta * s;
            up[i] = o.mean(g[i]) + beta * s;
        }
        std::vector<char> next = safe;
        for (std::size_t x = 0; x < n; ++x) {
            if (lip) {
                for (std::size_t k = 0; k < data.size(); ++k)
                    if (data.outputs()[k] - c.safety.E - c.safety.L * (g[x] - data.inputs()[k]).norm() >= c.h) next[x] = 1;
            } else {
                for (std::size_t xp = 0; xp < n; ++xp)
                    if (safe[xp] && lo[xp] - c.safety.L * (g[x] - g[xp]).norm() >= c.h) next[x] = 1;
            }
        }
        safe = next;
        double best_lower = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < n; ++i)
            if (safe[i]) best_lower = std::max(best_lower, lo[i]);
        const double off = lip ? c.safety.E : 0.0;
        std::vector<std::size_t> cand;
        for (std::size_t x = 0; x < n; ++x) {
            if (!safe[x]) continue;
            bool keep = up[x] >= best_lower;
            for (std::size_t z = 0; z < n && !keep; ++z)
                if (!safe[z] && up[x] - off - c.safety.L * (g[x] - g[z]).norm() >= c.h) keep = true;
            if (keep) cand.push_back(x);
        }
        if (cand.empty())
            for (std::size_t x = 0; x < n; ++x)
                if (safe[x]) cand.push_back(x);
        std::size_t pick = cand.front();
        for (auto x : cand)
            if (up[x] - lo[x] > (up[pick] - lo[pick]) + 1e-10) pick = x;
        picks.push_back(pick);
        data.append(g[pick], inst.f(g[pick]) + noise[t]);
    }
    return picks;
}

int violations(const std::vector<IterationRecord>& trace) {
    return static_cast<int>(std::count_if(trace.begin(), trace.end(), [](const auto& r) { return !r.safe_actual; }));
}

}  // namespace

TEST_CASE("first step with a single seed returns the seed") {
    const auto inst = make_instance(1);
    for (auto v : {AlgorithmVariant::SafeOptHeuristic, AlgorithmVariant::RealBetaSafeOpt, AlgorithmVariant::LoSBO}) {
        auto c = base_config(v, inst, 0.1);
        c.schedule = v == AlgorithmVariant::RealBetaSafeOpt ? BetaSchedule{RkhsNormBound{2.0, 0.1, 0.05}} : BetaSchedule{ConstantHeuristic{2.0}};
        DiscreteSafeSet s(inst.grid, {inst.seed}, inst.h);
        GpPosterior post(kKernel, Dataset(Box::unit(1)), 0.01);
        const auto step = step_safeopt_family(c, s, post);
        // The prior lower bound -2 is below h, so no expansion is possible.
        if (inst.h > -2.0) CHECK(step.index == inst.seed);
        CHECK(step.state.count() >= 1);
    }
}

TEST_CASE("equal widths break ties toward the lower grid index") {
    auto grid = std::make_shared<GridDomain>(Box::unit(1), std::vector<int>{10});
    AlgorithmConfig c;
    c.variant = AlgorithmVariant::LoSBO;
    c.kernel = kKernel;
    c.safety = LipschitzSafetyModel(1.0, 0.0);
    c.h = 0.0;
    DiscreteSafeSet s(grid, {7, 3}, 0.0);
    const auto step = step_safeopt_family(c, s, GpPosterior(kKernel, Dataset(Box::unit(1)), 0.01));
    CHECK(step.index == 3);
}

TEST_CASE("discrete loop matches a brute-force reference") {
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
        const auto inst = make_instance(100 + seed, 60);
        for (auto v : {AlgorithmVariant::SafeOptHeuristic, AlgorithmVariant::RealBetaSafeOpt, AlgorithmVariant::LoSBO}) {
            auto c = base_config(v, inst, 0.1);
            if (v == AlgorithmVariant::RealBetaSafeOpt) c.schedule = RkhsNormBound{2.0, 0.1, 0.05};
            c.budget = 5;
            std::vector<double> noise;
            Rng nrng(seed);
            std::uniform_real_distribution<double> u(-0.1, 0.1);
            for (int t = 0; t < 5; ++t) noise.push_back(u(nrng));
            std::size_t calls = 0;
            auto oracle = [&](const Point& x) { return inst.f(x) + noise[calls++]; };
            const auto trace = run_optimization(c, grid_problem(inst), oracle);
            const auto ref = reference_run(c, inst, noise);
            REQUIRE(trace.size() == 5);
            INFO("seed " << seed << " variant " << to_string(v));
            for (std::size_t t = 0; t < 5; ++t) {
                INFO("t " << t << " acq " << trace[t].acquisition_value << " deg " << trace[t].degenerate);
                CHECK(static_cast<std::size_t>(trace[t].grid_index) == ref[t]);
            }
        }
    }
}

TEST_CASE("queries stay inside the safe set and sets grow monotonically") {
    const auto inst = make_instance(5);
    for (auto v : {AlgorithmVariant::SafeOptHeuristic, AlgorithmVariant::LoSBO, AlgorithmVariant::RandomSafe}) {
        auto c = base_config(v, inst, 0.1);
        NoiseStream noise(UniformBounded{0.1}, 3);
        DiscreteSafeSet state(inst.grid, {inst.seed}, inst.h);
        GpPosterior post(kKernel, Dataset(Box::unit(1)), 0.01);
        Rng rng(9);
        for (int t = 0; t < 20; ++t) {
            auto step = step_safeopt_family(c, state, post, &rng);
            CHECK(step.state.is_safe(step.index));
            for (auto i : state.indices()) CHECK(step.state.is_safe(i));
            state = step.state;
            const Point x = (*inst.grid)[step.index];
            post = post.add_observation(x, noisy_eval(inst.f, noise, x));
        }
    }
}

TEST_CASE("multistart search examples") {
    const Box box = Box::unit(1);
    auto everywhere = [](const Point&) { return true; };
    auto concave = [](const Point& x) { return -(x[0] - 0.3) * (x[0] - 0.3); };
    const std::vector<Point> at_opt{p1(0.3)};
    CHECK(multistart_search(concave, everywhere, at_opt, box, 100, 0.1).x[0] == 0.3);

    const Box sq = Box::unit(2);
    const Point c = Eigen::Vector2d(0.37, 0.81);
    auto bowl = [&](const Point& x) { return -(x - c).squaredNorm(); };
    Rng rng(4);
    const auto starts = testing::random_points(rng, sq, 5);
    CHECK((multistart_search(bowl, everywhere, starts, sq, 200, 0.1).x - c).norm() < 1e-3);

    auto left = [](const Point& x) { return x[0] <= 0.5; };
    auto rising = [](const Point& x) { return x[0]; };
    const std::vector<Point> s2{p1(0.1), p1(0.9)};
    const auto r = multistart_search(rising, left, s2, box, 200, 0.1);
    CHECK(r.x[0] <= 0.5);
    CHECK(r.x[0] >= 0.5 - 1e-6);

    CHECK_THROWS_AS(multistart_search(rising, left, std::vector<Point>{p1(0.9)}, box, 10, 0.1), ArgumentError);
}

TEST_CASE("LoS-GP-UCB with an inactive constraint matches unconstrained search") {
    const Box box = Box::unit(1);
    Dataset data(box);
    data.append(p1(0.2), 100.0);
    data.append(p1(0.7), 100.5);
    const GpPosterior post(kKernel, data, 0.01);
    AlgorithmConfig c;
    c.variant = AlgorithmVariant::LoSGpUcb;
    c.kernel = kKernel;
    c.safety = LipschitzSafetyModel(1.0, 0.1);
    c.h = 0.0;
    ContinuousSafeRegion region{{p1(0.5)}, 0.0, c.safety, 0.0};
    for (int x = 0; x <= 100; ++x) REQUIRE(region.contains(data, p1(x / 100.0)));

    Rng a(11), b(11);
    const auto step = step_los_gp_ucb(c, region, post, a);
    const auto starts = generate_ucb_starts(c, region, data, box, b);
    const double beta = 2.0;
    auto ucb = [&](const Point& x) {
        const auto p = post.predict(x);
        return p.mean + beta * p.std;
    };
    const auto free = multistart_search(ucb, [](const Point&) { return true; }, starts, box, c.multistart.max_iters,
                                        c.multistart.step_init);
    CHECK(step.x == free.x);
    CHECK(step.acquisition_value == free.value);
}

TEST_CASE("LoS-GP-UCB with only the seed feasible returns the seed") {
    AlgorithmConfig c;
    c.variant = AlgorithmVariant::LoSGpUcb;
    c.kernel = kKernel;
    c.safety = LipschitzSafetyModel(1.0, 0.1);
    ContinuousSafeRegion region{{Eigen::Vector2d(0.4, 0.6)}, 0.0, c.safety, 0.0};
    Rng rng(1);
    const auto step = step_los_gp_ucb(c, region, GpPosterior(kKernel, Dataset(Box::unit(2)), 0.01), rng);
    CHECK(step.x == Eigen::Vector2d(0.4, 0.6));
}

TEST_CASE("LoS-GP-UCB is near the best feasible value on a dense grid") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto inst = make_instance(300 + seed);
        auto c = base_config(AlgorithmVariant::LoSGpUcb, inst, 0.1);
        const Point x0 = (*inst.grid)[inst.seed];
        ContinuousSafeRegion region{{x0}, 0.0, c.safety, inst.h};
        NoiseStream noise(UniformBounded{0.1}, seed);
        Rng rng(seed);
        Dataset data(Box::unit(1));
        data.append(x0, noisy_eval(inst.f, noise, x0));
        for (int i = 0; i < 4; ++i) {
            const Point x = sample_uniform(Box::unit(1), rng);
            if (region.contains(data, x)) data.append(x, noisy_eval(inst.f, noise, x));
        }
        const GpPosterior post(kKernel, data, 0.01);
        const auto step = step_los_gp_ucb(c, region, post, rng);
        CHECK(region.contains(data, step.x));

        double best = -std::numeric_limits<double>::infinity(), worst = std::numeric_limits<double>::infinity();
        for (int i = 0; i < 2000; ++i) {
            const Point x = p1(i / 1999.0);
            if (!region.contains(data, x)) continue;
            const auto p = post.predict(x);
            const double a = p.mean + 2.0 * p.std;
            best = std::max(best, a);
            worst = std::min(worst, a);
        }
        CHECK(step.acquisition_value >= best - 1e-3 * (best - worst));
    }
}

TEST_CASE("run_optimization basics") {
    const auto inst = make_instance(7);
    auto c = base_config(AlgorithmVariant::LoSBO, inst, 0.1);
    c.budget = 1;
    NoiseStream n1(UniformBounded{0.1}, 1);
    auto oracle1 = [&](const Point& x) { return noisy_eval(inst.f, n1, x); };
    const auto one = run_optimization(c, grid_problem(inst), oracle1);
    REQUIRE(one.size() == 1);
    CHECK(one[0].grid_index == static_cast<long long>(inst.seed));
    CHECK(std::isnan(one[0].f_true));
    CHECK(one[0].t == 1);

    c.budget = 15;
    for (auto v : {AlgorithmVariant::LoSBO, AlgorithmVariant::RandomSafe, AlgorithmVariant::LoSGpUcb}) {
        c.variant = v;
        c.multistart.num_starts = 8;
        NoiseStream a(UniformBounded{0.1}, 2), b(UniformBounded{0.1}, 2);
        auto oa = [&](const Point& x) { return noisy_eval(inst.f, a, x); };
        auto ob = [&](const Point& x) { return noisy_eval(inst.f, b, x); };
        const auto ta = run_optimization(c, grid_problem(inst), oa);
        const auto tb = run_optimization(c, grid_problem(inst), ob);
        REQUIRE(ta.size() == tb.size());
        for (std::size_t i = 0; i < ta.size(); ++i) {
            CHECK(ta[i].x == tb[i].x);
            CHECK(ta[i].y_noisy == tb[i].y_noisy);
            CHECK(ta[i].t == static_cast<int>(i) + 1);
        }
    }
    c.budget = 0;
    CHECK_THROWS_AS(run_optimization(c, grid_problem(inst), oracle1), ArgumentError);
}

TEST_CASE("LoSBO never queries unsafe points, for any beta") {
    for (std::uint64_t fs = 1; fs <= 4; ++fs) {
        const auto inst = make_instance(500 + fs);
        auto truth = [&](const Point& x) { return inst.f(x); };
        for (double beta : {0.5, 2.0, 10.0}) {
            for (std::uint64_t seed = 0; seed < 20; ++seed) {
                auto c = base_config(AlgorithmVariant::LoSBO, inst, 0.1);
                c.schedule = ConstantHeuristic{beta};
                c.rng_seed = seed;
                NoiseStream noise(UniformBounded{0.1}, derive_seed(fs, beta * 10, seed));
                auto oracle = [&](const Point& x) { return noisy_eval(inst.f, noise, x); };
                const auto trace = run_optimization(c, grid_problem(inst), oracle, truth);
                CHECK(violations(trace) == 0);
            }
        }
    }
}
