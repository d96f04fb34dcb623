// Acceptance checks 1-12. Prints one line per criterion; exit status is the
// number of failures.
#include <rpso/harness.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <tuple>

using namespace rpso;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

class Check {
public:
    void require(bool ok, const std::string& what)
    {
        if (!ok && failures_++ < 5) {
            notes_ << (notes_.tellp() > 0 ? "; " : "") << what;
        }
    }
    void note(const std::string& s) { info_ << (info_.tellp() > 0 ? ", " : "") << s; }
    Outcome outcome() const
    {
        std::string d = info_.str();
        if (failures_ > 0) {
            d += (d.empty() ? "" : "; ") + std::to_string(failures_) + " failure(s): " + notes_.str();
        }
        return {failures_ == 0, d};
    }

private:
    std::size_t failures_ = 0;
    std::ostringstream notes_;
    std::ostringstream info_;
};

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

double median(std::vector<double> v)
{
    std::sort(v.begin(), v.end());
    const auto m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double eval(std::string_view name, Point x) { return make_problem(name, x.size())(x); }

Outcome criterion1()
{
    Check c;
    auto near = [&](double got, double want, const std::string& what) {
        c.require(std::abs(got - want) <= 1e-12, what + " = " + fmt(got) + " (want " + fmt(want) + ")");
    };
    near(eval("sphere", {20, 20, 20}), 0.0, "sphere min");
    near(eval("rastrigin", {20, 20}), 0.0, "rastrigin min");
    near(eval("ackley", {50, 50, 50, 50, 50}), 0.0, "ackley min");
    near(eval("rosenbrock", {11, 11}), 0.0, "rosenbrock min");
    near(eval("heaviside-sphere", {-20, -20}), 0.0, "heaviside boundary");
    near(eval("heaviside-sphere", {-25, -25}), 0.5, "heaviside interior");
    near(eval("sawtooth", {-5.0}), 0.2, "sawtooth");
    near(eval("sawtooth", {-5.8, -5.0}), 0.6, "sawtooth 2d");
    near(eval("brankes-multipeak", {-6.0}), 0.3, "branke left peak");
    near(eval("brankes-multipeak", {-4.0}), 0.0, "branke right peak");
    near(eval("brankes-multipeak", {-5.0}), 1.3 - 1.3 / 256.0, "branke origin");
    near(eval("multipeak-f1", {-4.9}), -1.0, "multipeak f1 peak");
    near(eval("multipeak-f2", {10.0}), 0.0, "multipeak f2 origin");
    near(eval("pickelhaube", {-35.0}), 0.0, "pickelhaube centre");
    near(eval("pickelhaube", {-30.0}), 5.0 / (5.0 - std::sqrt(5.0)) - 0.1, "pickelhaube spike");
    near(eval("ackley", {51.0}), -20.0 * std::exp(-0.2) + 20.0, "ackley offset");
    near(eval("rastrigin", {20.5}), 20.25, "rastrigin offset");
    near(eval("rosenbrock", {10, 10, 10}), 2.0, "rosenbrock origin");
    const auto suite = canonical_suite(30);
    c.require(suite.size() == 10, "suite size");
    const auto f2 = make_problem("multipeak-f2", 1);
    c.require(f2.domain.lower[0] == 10.0 && f2.domain.upper[0] == 20.0 && f2.gamma == 0.5, "multipeak f2 table row");
    return c.outcome();
}

// Smallest achievable max_h cos(d, h - x) over 1e4 unit directions.
double angular_brute_force(const Point& x, const HighCostSet& h)
{
    constexpr int steps = 10000;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < steps; ++k) {
        const double t = 2.0 * std::numbers::pi * k / steps;
        double worst = -std::numeric_limits<double>::infinity();
        for (const auto& p : h.points) {
            const double dx = p[0] - x[0];
            const double dy = p[1] - x[1];
            worst = std::max(worst, (std::cos(t) * dx + std::sin(t) * dy) / std::hypot(dx, dy));
        }
        best = std::min(best, worst);
    }
    return best;
}

Outcome criterion2()
{
    Check c;
    Rng rng(20);
    const double eps = 1e-3;
    std::size_t infeasible = 0;
    double worst_gap = 0.0;
    for (int inst = 0; inst < 500; ++inst) {
        const Point x{rng.uniform(-1, 1), rng.uniform(-1, 1)};
        HighCostSet h;
        for (std::size_t k = 0, m = 1 + rng.index(6); k < m; ++k) {
            h.points.push_back(sample_in_ball(x, 1.0, rng));
        }
        const double oracle = angular_brute_force(x, h);
        const auto r = solve_direction(x, h, eps);
        const bool oracle_feasible = oracle <= -eps;
        if (r) {
            worst_gap = std::max(worst_gap, std::abs(r->beta - oracle));
            c.require(std::abs(r->beta - oracle) <= 1e-3, "instance " + std::to_string(inst) + " beta gap");
        } else {
            ++infeasible;
        }
        // Verdicts may only disagree where the brute force lies within its own
        // resolution of the -eps threshold.
        if (r.has_value() != oracle_feasible) {
            c.require(std::abs(oracle + eps) <= 1e-3, "instance " + std::to_string(inst) + " verdict");
        }
    }
    c.note("infeasible " + std::to_string(infeasible) + "/500");
    c.note("max beta gap " + fmt(worst_gap));
    return c.outcome();
}

Outcome criterion3()
{
    Check c;
    const double gamma = 0.8;
    const Point x{3.0, -1.0};
    const Point d{0.6, 0.8};
    auto at = [&](double s) {
        HighCostSet h;
        h.points.push_back({x[0] + s * d[0], x[1] + s * d[1]});
        return h;
    };
    c.require(std::abs(step_length(x, d, at(gamma), gamma) - 2.0 * gamma) <= 1e-9, "hcp ahead");
    c.require(std::abs(step_length(x, d, at(-gamma), gamma)) <= 1e-9, "hcp behind");
    c.require(std::abs(step_length(x, d, at(1e-12), gamma) - gamma) <= 1e-9, "hcp at x");

    Rng rng(30);
    std::size_t tested = 0;
    std::size_t violations = 0;
    while (tested < 500) {
        const std::size_t n = 2 + rng.index(4);
        const double g = rng.uniform(0.1, 3.0);
        Point y(n);
        for (auto& v : y) {
            v = rng.uniform(-5, 5);
        }
        HighCostSet h;
        for (std::size_t k = 0, m = 1 + rng.index(6); k < m; ++k) {
            h.points.push_back(sample_in_ball(y, g, rng));
        }
        const auto dir = solve_direction(y, h, 1e-3);
        if (!dir) {
            continue;
        }
        ++tested;
        const double rho = step_length(y, dir->d, h, g);
        Point moved(n);
        for (std::size_t i = 0; i < n; ++i) {
            moved[i] = y[i] + rho * dir->d[i];
        }
        bool outside = true;
        for (const auto& p : h.points) {
            outside = outside && distance(p, moved) >= g - 1e-9;
        }
        violations += outside ? 0 : 1;
        c.require(outside, "instance " + std::to_string(tested) + " leaves an hcp inside");
    }
    c.note("500 feasible instances, " + std::to_string(violations) + " with an hcp still inside the new ball");
    return c.outcome();
}

Outcome criterion4()
{
    Check c;
    Rng rng(40);
    const LehConfig cfg;
    double worst_ratio = std::numeric_limits<double>::infinity();
    for (int inst = 0; inst < 50; ++inst) {
        const double lo0 = rng.uniform(-10, 10);
        const double lo1 = rng.uniform(-10, 10);
        const BoxDomain box({lo0, lo1}, {lo0 + rng.uniform(0.5, 20), lo1 + rng.uniform(0.5, 20)});
        GlobalHighCostSet h;
        for (std::size_t k = 0, m = 1 + rng.index(8); k < m; ++k) {
            h.points.push_back(uniform_in_box(box, rng));
        }
        double grid = 0.0;
        constexpr int steps = 200;
        for (int i = 0; i < steps; ++i) {
            for (int j = 0; j < steps; ++j) {
                const Point q{box.lower[0] + box.width(0) * i / (steps - 1), box.lower[1] + box.width(1) * j / (steps - 1)};
                grid = std::max(grid, clearance(q, h));
            }
        }
        const auto s = largest_empty_sphere(h, box, cfg, rng);
        c.require(box.contains(s.center), "centre outside box");
        const double ratio = clearance(s.center, h) / grid;
        worst_ratio = std::min(worst_ratio, ratio);
        c.require(ratio >= 0.95, "instance " + std::to_string(inst) + " ratio " + fmt(ratio));
    }
    c.note("worst ratio " + fmt(worst_ratio));
    return c.outcome();
}

Outcome criterion5()
{
    Check c;
    const auto& g = default_grammar();
    Rng rng(50);
    std::vector<Node> pool;
    auto valid = [&](const Node& t) {
        if (!g.conforms(t)) {
            return false;
        }
        try {
            decode(t, 2000).validate();
            return true;
        } catch (const std::exception&) {
            return false;
        }
    };
    for (int i = 0; i < 10000; ++i) {
        pool.push_back(random_genome(g, rng));
        c.require(valid(pool.back()), "random genome invalid");
    }
    for (int i = 0; i < 10000; ++i) {
        const auto child = crossover(pool[rng.index(pool.size())], pool[rng.index(pool.size())], rng);
        c.require(valid(child), "crossover child invalid");
    }
    for (int i = 0; i < 10000; ++i) {
        c.require(valid(mutate_genome(pool[rng.index(pool.size())], 1.0, g, rng)), "mutant invalid");
    }
    // Some frac in [0, 1] reproduces each reference (group, extent) pair.
    for (auto [group, extent] : {std::pair{2u, 48u}, {21u, 4u}, {10u, 6u}}) {
        bool found = false;
        for (int k = 0; k <= 1000 && !found; ++k) {
            found = inner_extent(k / 1000.0, 2000, group) == extent;
        }
        c.require(found, "no frac gives (" + std::to_string(group) + ", " + std::to_string(extent) + ")");
    }
    c.note("3 x 10000 trees");
    return c.outcome();
}

// Written independently from the ranking rule: rank = 1 + #better + #ties/2
// among the survivors; remove the worst (rank, mean, index) tuple each round.
std::vector<std::size_t> elimination_oracle(const std::vector<std::vector<double>>& s)
{
    const std::size_t h = s.size();
    const std::size_t m = h ? s[0].size() : 0;
    std::vector<bool> alive(h, true);
    std::vector<std::size_t> removed;
    for (std::size_t round = 0; round < h; ++round) {
        std::tuple<double, double, std::size_t> worst{-1.0, 0.0, 0};
        bool have = false;
        for (std::size_t i = 0; i < h; ++i) {
            if (!alive[i]) {
                continue;
            }
            double rank_sum = 0.0;
            double score_sum = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                double r = 1.0;
                for (std::size_t j = 0; j < h; ++j) {
                    if (alive[j] && j != i) {
                        r += s[j][k] < s[i][k] ? 1.0 : (s[j][k] == s[i][k] ? 0.5 : 0.0);
                    }
                }
                rank_sum += r;
                score_sum += s[i][k];
            }
            const std::tuple<double, double, std::size_t> key{rank_sum / m, score_sum / m, i};
            if (!have || key > worst) {
                worst = key;
                have = true;
            }
        }
        removed.push_back(std::get<2>(worst));
        alive[std::get<2>(worst)] = false;
    }
    return {removed.rbegin(), removed.rend()};
}

Outcome criterion6()
{
    Check c;
    Rng rng(60);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t h = 1 + rng.index(12);
        const std::size_t m = 1 + rng.index(10);
        // Coarse values so that ties are common.
        const double levels = t % 2 ? 4.0 : 1000.0;
        std::vector<std::vector<double>> s(h, std::vector<double>(m));
        for (auto& row : s) {
            for (auto& v : row) {
                v = std::floor(rng.uniform() * levels);
            }
        }
        c.require(elimination_ranking(s) == elimination_oracle(s), "matrix " + std::to_string(t));
    }
    c.note("1000 matrices");
    return c.outcome();
}

Outcome criterion7(const Executor& ex)
{
    const auto names = canonical_suite(1);
    std::vector<int> bad(1000, 0);
    ex.for_each_index(1000, [&](std::size_t i) {
        Rng rng(derive_seed(70, {i}));
        const auto cfg = decode(random_genome(default_grammar(), rng), 300);
        const auto n = 1 + rng.index(5);
        const auto p = make_problem(names[rng.index(names.size())].kind, n);
        const std::size_t budget = 1 + rng.index(400);
        EvaluationLedger ledger(p, budget);
        const auto r = run_heuristic(cfg, p, budget, derive_seed(71, {i}), &ledger);
        const bool ok = ledger.total_spent() <= budget && ledger.total_spent() + ledger.budget_remaining() == budget &&
                        r.evaluations == ledger.total_spent();
        bad[i] = ok ? 0 : 1;
    });
    Check c;
    for (std::size_t i = 0; i < bad.size(); ++i) {
        c.require(bad[i] == 0, "run " + std::to_string(i));
    }
    c.note("1000 runs");
    return c.outcome();
}

HeuristicConfig baseline_rpso()
{
    HeuristicConfig c;
    c.group_size = 10;
    c.velocity = {Baseline::Inertia, 1.5, 1.5, 0.7};
    c.topology.kind = TopologyKind::Global;
    c.mutation.kind = MutationKind::None;
    c.inner.form = InnerForm::RandomSampling;
    c.inner.extent = 5;
    return c;
}

Outcome criterion8(const Executor& ex)
{
    const auto p = make_problem("sphere", 5);
    auto cfg = baseline_rpso();
    cfg.inner.extent = 20;
    std::vector<double> on(50);
    std::vector<double> off(50);
    ex.for_each_index(100, [&](std::size_t i) {
        auto c = cfg;
        c.inner.use_stopping = i < 50;
        const auto r = run_heuristic(c, p, 2000, derive_seed(80, {i % 50}));
        (i < 50 ? on : off)[i % 50] = r.evaluations_per_appraisal();
    });
    Check c;
    const double m_on = median(on);
    const double m_off = median(off);
    c.note("median evals/appraisal on " + fmt(m_on) + " off " + fmt(m_off));
    c.require(m_on < m_off, "stopping did not reduce evaluations per appraisal");
    return c.outcome();
}

Outcome criterion9(const Executor& ex)
{
    const std::vector<ProblemInstance> ps{make_problem("sphere", 2)};
    GpConfig gp;
    gp.population_size = 20;
    gp.generations = 8;
    gp.fitness_replicates = 5;
    gp.heuristic_budget = 500;
    const auto record = evolve(gp, ps, 90, ex);
    const auto champion = decode(record.best, 500);

    const EvaluationOptions opt{50, 500, 1'000'000};
    const auto champ = evaluate_champion(champion, ps, opt, 91, ex)[0].post_processed();
    const auto base = evaluate_champion(baseline_rpso(), ps, opt, 91, ex)[0].post_processed();
    const auto test = wilcoxon_rank_sum(champ, base);
    const double mc = summarize(champ).mean;
    const double mb = summarize(base).mean;
    Check c;
    c.note("champion group " + std::to_string(champion.group_size) + " extent " + std::to_string(champion.inner.extent) +
           " fitness " + fmt(record.best_fitness.fitness));
    c.note("champion mean " + fmt(mc) + " baseline mean " + fmt(mb) + " p " + fmt(test.p_value));
    c.require(mc < mb, "champion mean not lower");
    c.require(test.p_value < 0.05, "difference not significant");
    return c.outcome();
}

Outcome criterion10()
{
    Check c;
    const auto p = make_problem("sphere", 1);
    for (std::uint64_t s = 0; s < 5; ++s) {
        Rng rng(100 + s);
        const double v = post_process_robust_value(Point{20.0}, p, 1'000'000, rng);
        c.note(fmt(v));
        c.require(std::abs(v - 1.0) <= 0.002, "seed " + std::to_string(s));
    }
    return c.outcome();
}

Outcome criterion11()
{
    Rng rng(110);
    std::size_t rejections = 0;
    constexpr std::size_t trials = 10000;
    std::vector<double> a(20);
    std::vector<double> b(20);
    for (std::size_t t = 0; t < trials; ++t) {
        for (std::size_t i = 0; i < 20; ++i) {
            a[i] = rng.normal();
            b[i] = rng.normal();
        }
        rejections += wilcoxon_rank_sum(a, b).p_value < 0.05 ? 1 : 0;
    }
    const double rate = static_cast<double>(rejections) / trials;
    Check c;
    c.note("type-I rate " + fmt(rate));
    c.require(rate >= 0.04 && rate <= 0.06, "rate outside [0.04, 0.06]");
    return c.outcome();
}

Outcome criterion12()
{
    Check c;
    Rng rng(120);
    std::vector<ArchiveEntry> archive;
    for (std::size_t i = 0; i < 253; ++i) {
        ArchiveEntry e;
        e.generation = i / 23;
        e.index = i % 23;
        e.genome = random_genome(default_grammar(), rng);
        e.fitness.fitness = std::floor(rng.uniform() * 50.0);
        archive.push_back(std::move(e));
    }
    const auto rows = component_report(archive, 2000);

    // Independent recount: sort by fitness (stable), cut deciles, classify.
    std::vector<std::size_t> order(archive.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](auto x, auto y) { return archive[x].fitness.fitness < archive[y].fitness.fitness; });
    std::map<std::tuple<std::string, std::string, std::string>, std::size_t> expected;
    std::map<std::string, std::size_t> decile_size;
    const std::size_t n = archive.size();
    for (std::size_t pos = 0; pos < n; ++pos) {
        const auto cfg = decode(archive[order[pos]].genome, 2000);
        const std::size_t d = pos * 10 / n;
        char scope[16];
        std::snprintf(scope, sizeof scope, "decile_%02zu", d + 1);
        decile_size[scope] += 1;
        for (const auto& def : component_definitions()) {
            const auto cat = def.classify(cfg);
            expected[{def.name, cat, "all"}] += 1;
            expected[{def.name, cat, scope}] += 1;
            if (pos < (n + 2) / 3) {
                expected[{def.name, cat, "top_third"}] += 1;
            }
        }
    }
    std::map<std::pair<std::string, std::string>, double> share;
    std::size_t decile_total = 0;
    for (const auto& [scope, size] : decile_size) {
        decile_total += size;
    }
    c.require(decile_total == n, "deciles do not partition the archive");
    for (const auto& r : rows) {
        const auto it = expected.find({r.component, r.category, r.scope});
        c.require((it == expected.end() ? 0 : it->second) == r.count,
                  r.component + "/" + r.category + "/" + r.scope + " count");
        if (r.scope.rfind("decile_", 0) == 0) {
            c.require(r.total == decile_size[r.scope], r.scope + " size");
        }
        share[{r.component, r.scope}] += r.proportion();
    }
    for (const auto& [key, total] : share) {
        c.require(std::abs(total - 1.0) <= 1e-12, key.first + "/" + key.second + " sums to " + fmt(total));
    }
    c.note(std::to_string(share.size()) + " component/scope tables");
    return c.outcome();
}

} // namespace

int main()
{
    const Executor ex;
    const std::vector<std::tuple<int, double, std::function<Outcome()>>> criteria{
        {1, 1.0, criterion1},
        {2, 10.0, criterion2},
        {3, 0.0, criterion3},
        {4, 30.0, criterion4},
        {5, 0.0, criterion5},
        {6, 0.0, criterion6},
        {7, 0.0, [&] { return criterion7(ex); }},
        {8, 0.0, [&] { return criterion8(ex); }},
        {9, 0.0, [&] { return criterion9(ex); }},
        {10, 0.0, criterion10},
        {11, 0.0, criterion11},
        {12, 0.0, criterion12},
    };
    int failures = 0;
    for (const auto& [id, limit, fn] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (limit > 0.0 && secs >= limit) {
            o.pass = false;
            o.detail += "; exceeded " + fmt(limit) + " s";
        }
        failures += o.pass ? 0 : 1;
        std::printf("criterion %d: %s (%.2f s) %s\n", id, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures;
}
