#include <CLI11.hpp>
#include <json.hpp>
#include <rpso/harness.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Overrides {
    std::vector<std::string> problems;
    std::optional<std::size_t> dimension;
    std::optional<std::size_t> budget;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> runs;
    std::optional<std::size_t> post_samples;
    std::optional<std::size_t> threads;
    std::optional<std::size_t> pop;
    std::optional<std::size_t> gens;
    std::optional<std::size_t> reps;
    std::optional<std::string> mode;
    std::optional<std::string> output;

    void apply(json& j) const
    {
        if (!problems.empty()) {
            j["problems"] = problems;
        }
        auto set = [&](const char* key, const auto& v) {
            if (v) {
                j[key] = *v;
            }
        };
        set("dimension", dimension);
        set("budget", budget);
        set("seed", seed);
        set("runs", runs);
        set("post_samples", post_samples);
        set("threads", threads);
        set("mode", mode);
        set("output", output);
        if (pop || gens || reps) {
            if (!j.contains("gp")) {
                j["gp"] = json::object();
            }
            if (pop) {
                j["gp"]["population_size"] = *pop;
            }
            if (gens) {
                j["gp"]["generations"] = *gens;
            }
            if (reps) {
                j["gp"]["fitness_replicates"] = *reps;
            }
        }
    }
};

void write_json(const fs::path& path, const json& j) { rpso::write_file_atomic(path, j.dump(2) + "\n"); }

json provenance(const json& config, std::uint64_t seed)
{
    return {{"version", rpso::version}, {"seed", seed}, {"config", config}};
}

// Accepts a bare genome tree or a champion file holding one under "genome".
rpso::Node load_genome(const fs::path& path)
{
    const auto j = rpso::read_json_file(path);
    return rpso::genome_from_json(j.contains("genome") ? j.at("genome") : j);
}

rpso::HeuristicConfig load_heuristic(const std::optional<std::string>& config, const std::optional<std::string>& genome,
                                     std::size_t budget)
{
    if (config.has_value() == genome.has_value()) {
        throw std::invalid_argument("give exactly one of --config or --genome");
    }
    if (genome) {
        return rpso::decode(load_genome(*genome), budget);
    }
    return rpso::heuristic_from_json(rpso::read_json_file(*config));
}

json run_result_json(const rpso::RunResult& r)
{
    json j{{"best_point", r.best_point},
           {"best_value", r.best_value},
           {"evaluations", r.evaluations},
           {"budget", r.budget},
           {"iterations", r.iterations},
           {"appraisals", r.appraisals},
           {"dormant_skips", r.dormant_skips},
           {"early_stops", r.early_stops},
           {"relocations", r.relocations},
           {"stalled", r.stalled},
           {"seed", r.seed}};
    j["post_processed"] = r.post_processed ? json(*r.post_processed) : json(nullptr);
    return j;
}

int cmd_problems(std::size_t dim, const std::optional<std::string>& out)
{
    std::ostringstream os;
    os << "name,alias,dimension,lower,upper,gamma\n";
    for (const auto& p : rpso::canonical_suite(dim)) {
        os << '"' << p.name << "\"," << rpso::problem_alias(p.kind) << ',' << p.dimension << ','
           << rpso::format_double(p.domain.lower.front()) << ',' << rpso::format_double(p.domain.upper.front()) << ','
           << rpso::format_double(p.gamma) << '\n';
    }
    if (out) {
        rpso::write_file_atomic(*out, os.str());
    } else {
        std::cout << os.str();
    }
    return 0;
}

struct RunArgs {
    std::optional<std::string> config;
    std::optional<std::string> genome;
    std::string problem = "sphere";
    std::size_t dimension = 2;
    std::size_t budget = 2000;
    std::uint64_t seed = 1;
    std::size_t post_samples = 0;
    std::string output = "runs/run";
};

int cmd_run(const RunArgs& a)
{
    const auto cfg = load_heuristic(a.config, a.genome, a.budget);
    const auto problem = rpso::make_problem(a.problem, a.dimension);
    auto result = rpso::run_heuristic(cfg, problem, a.budget, a.seed);
    if (a.post_samples > 0) {
        rpso::Rng rng(rpso::derive_seed(a.seed, {1}));
        result.post_processed = rpso::post_process_robust_value(result.best_point, problem, a.post_samples, rng);
    }
    const json resolved{{"mode", "run-heuristic"},   {"problem", problem.name}, {"dimension", a.dimension},
                        {"budget", a.budget},        {"post_samples", a.post_samples},
                        {"heuristic", rpso::to_json(cfg)}};
    auto doc = provenance(resolved, a.seed);
    write_json(fs::path(a.output) / "config.json", doc);
    doc["result"] = run_result_json(result);
    write_json(fs::path(a.output) / "result.json", doc);
    std::cout << problem.name << ": estimate " << result.best_value << " after " << result.evaluations
              << " evaluations\n";
    return 0;
}

int cmd_gp(const std::string& config_path, const Overrides& ov)
{
    auto j = rpso::read_json_file(config_path);
    ov.apply(j);
    const auto exp = rpso::experiment_from_json(j);
    if (exp.mode != "gp-individual" && exp.mode != "gp-general") {
        throw std::invalid_argument("gp needs mode gp-individual or gp-general, got '" + exp.mode + "'");
    }
    const auto problems = exp.resolve_problems();
    const fs::path out(exp.output);
    write_json(out / "config.json", provenance(rpso::to_json(exp), exp.seed));

    const rpso::Executor executor(exp.threads);
    const auto record = rpso::evolve(exp.gp, problems, exp.seed, executor);

    auto archive = rpso::to_json(record);
    archive["provenance"] = provenance(rpso::to_json(exp), exp.seed);
    write_json(out / "archive.json", archive);

    auto champion = provenance(rpso::to_json(exp), exp.seed);
    champion["genome"] = rpso::genome_to_json(record.best);
    champion["heuristic"] = rpso::to_json(rpso::decode(record.best, exp.budget));
    champion["fitness"] = record.best_fitness.fitness;
    champion["problem_means"] = record.best_fitness.problem_means;
    write_json(out / "champion.json", champion);

    std::ostringstream progress;
    progress << rpso::csv_provenance(rpso::to_json(exp), exp.seed) << "generation,best_fitness\n";
    for (std::size_t g = 0; g < record.best_fitness_per_generation.size(); ++g) {
        progress << g << ',' << rpso::format_double(record.best_fitness_per_generation[g]) << '\n';
    }
    rpso::write_file_atomic(out / "progress.csv", progress.str());
    rpso::write_file_atomic(out / "components.csv", rpso::csv_provenance(rpso::to_json(exp), exp.seed) +
                                                        rpso::component_csv(rpso::component_report(record)));
    std::cout << "champion fitness " << record.best_fitness.fitness << " written to " << out.string() << '\n';
    return 0;
}

int cmd_eval(const std::optional<std::string>& experiment, const std::optional<std::string>& config,
             const std::optional<std::string>& genome, Overrides ov)
{
    json j = experiment ? rpso::read_json_file(*experiment) : json::object();
    if (!ov.output && !j.contains("output")) {
        ov.output = "runs/eval";
    }
    ov.mode = "evaluate-champion";
    ov.apply(j);
    const auto exp = rpso::experiment_from_json(j);
    const auto cfg = load_heuristic(config, genome, exp.budget);
    const auto problems = exp.resolve_problems();

    json resolved = rpso::to_json(exp);
    resolved["heuristic"] = rpso::to_json(cfg);
    const fs::path out(exp.output);
    write_json(out / "config.json", provenance(resolved, exp.seed));

    const rpso::EvaluationOptions opt{exp.runs, exp.budget, exp.post_samples};
    const auto sets = rpso::evaluate_champion(cfg, problems, opt, exp.seed, rpso::Executor(exp.threads));
    const auto header = rpso::csv_provenance(resolved, exp.seed);
    rpso::write_file_atomic(out / "samples.csv", header + rpso::samples_csv(sets));
    rpso::write_file_atomic(out / "summary.csv", header + rpso::summary_csv(sets));
    for (const auto& s : sets) {
        const auto sm = rpso::summarize(s.post_processed());
        std::cout << s.problem << ": mean " << sm.mean << " median " << sm.median << '\n';
    }
    return 0;
}

int cmd_report(const std::string& archive_path, const std::string& output)
{
    const auto j = rpso::read_json_file(archive_path);
    const auto record = rpso::gp_record_from_json(j);
    const json resolved{{"mode", "component-report"}, {"archive", archive_path}};
    const std::uint64_t seed = j.contains("provenance") ? j["provenance"].value("seed", std::uint64_t{0}) : 0;
    const fs::path out(output);
    write_json(out / "config.json", provenance(resolved, seed));
    rpso::write_file_atomic(out / "components.csv",
                            rpso::csv_provenance(resolved, seed) + rpso::component_csv(rpso::component_report(record)));
    std::cout << record.archive.size() << " genomes summarised in " << (out / "components.csv").string() << '\n';
    return 0;
}

void add_experiment_flags(CLI::App* cmd, Overrides& ov)
{
    cmd->add_option("--problem", ov.problems, "Problem names or aliases; 'all' for the full suite");
    cmd->add_option("--dim", ov.dimension, "Dimension")->check(CLI::PositiveNumber);
    cmd->add_option("--budget", ov.budget, "Evaluations per heuristic run")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", ov.seed, "Master seed");
    cmd->add_option("--threads", ov.threads, "Worker threads (0 = hardware)");
    cmd->add_option("--out", ov.output, "Output directory");
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Robust PSO heuristics, grammar-guided generation and evaluation"};
    app.require_subcommand(1);
    app.set_version_flag("--version", rpso::version);

    std::size_t problems_dim = 30;
    std::optional<std::string> problems_out;
    auto* problems_cmd = app.add_subcommand("problems", "List the benchmark suite");
    problems_cmd->add_option("--dim", problems_dim, "Dimension")->check(CLI::PositiveNumber);
    problems_cmd->add_option("--out", problems_out, "Write CSV here instead of stdout");

    RunArgs run_args;
    auto* run_cmd = app.add_subcommand("run", "Run one heuristic on one problem");
    run_cmd->add_option("--config", run_args.config, "Heuristic config JSON");
    run_cmd->add_option("--genome", run_args.genome, "Genome JSON (decoded with --budget)");
    run_cmd->add_option("--problem", run_args.problem, "Problem name or alias");
    run_cmd->add_option("--dim", run_args.dimension, "Dimension")->check(CLI::PositiveNumber);
    run_cmd->add_option("--budget", run_args.budget, "Evaluation budget")->check(CLI::PositiveNumber);
    run_cmd->add_option("--seed", run_args.seed, "Seed");
    run_cmd->add_option("--post-samples", run_args.post_samples, "Post-processing samples (0 = skip)");
    run_cmd->add_option("--out", run_args.output, "Output directory");

    std::string gp_config;
    Overrides gp_ov;
    auto* gp_cmd = app.add_subcommand("gp", "Evolve heuristics");
    gp_cmd->add_option("--config", gp_config, "Experiment config JSON")->required();
    add_experiment_flags(gp_cmd, gp_ov);
    gp_cmd->add_option("--mode", gp_ov.mode, "gp-individual or gp-general");
    gp_cmd->add_option("--pop", gp_ov.pop, "Population size");
    gp_cmd->add_option("--gens", gp_ov.gens, "Generations");
    gp_cmd->add_option("--reps", gp_ov.reps, "Fitness replicates");

    std::optional<std::string> eval_experiment;
    std::optional<std::string> eval_config;
    std::optional<std::string> eval_genome;
    Overrides eval_ov;
    auto* eval_cmd = app.add_subcommand("eval", "Evaluate a champion over independent runs");
    eval_cmd->add_option("--experiment", eval_experiment, "Experiment config JSON supplying defaults");
    eval_cmd->add_option("--config", eval_config, "Heuristic config JSON");
    eval_cmd->add_option("--genome", eval_genome, "Genome or champion JSON");
    add_experiment_flags(eval_cmd, eval_ov);
    eval_cmd->add_option("--runs", eval_ov.runs, "Runs per problem")->check(CLI::PositiveNumber);
    eval_cmd->add_option("--post-samples", eval_ov.post_samples, "Post-processing samples per run");

    std::string report_archive;
    std::string report_out = "runs/report";
    auto* report_cmd = app.add_subcommand("report", "Component breakdown of a GP archive");
    report_cmd->add_option("--archive", report_archive, "archive.json from a gp run")->required();
    report_cmd->add_option("--out", report_out, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (problems_cmd->parsed()) {
            return cmd_problems(problems_dim, problems_out);
        }
        if (run_cmd->parsed()) {
            return cmd_run(run_args);
        }
        if (gp_cmd->parsed()) {
            return cmd_gp(gp_config, gp_ov);
        }
        if (eval_cmd->parsed()) {
            return cmd_eval(eval_experiment, eval_config, eval_genome, eval_ov);
        }
        if (report_cmd->parsed()) {
            return cmd_report(report_archive, report_out);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
