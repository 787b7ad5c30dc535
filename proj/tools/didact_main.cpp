// didact: run, score, and export teacher-student didactic interactions,
// plus a tabular meta-RL lab for the feedback-integration experiments.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "didact/config.hpp"
#include "didact/lab.hpp"
#include "didact/leakage.hpp"
#include "didact/metrics.hpp"
#include "didact/orchestrator.hpp"
#include "didact/store.hpp"

namespace {

using namespace didact;

EpisodeMode parse_mode(const std::string& text) {
    if (text == "didactic") return EpisodeMode::Didactic;
    if (text == "single") return EpisodeMode::SingleTurn;
    if (text == "autodidact") return EpisodeMode::Autodidact;
    throw std::runtime_error("unknown mode '" + text + "' (didactic|single|autodidact)");
}

struct CommonOptions {
    std::string config_path;
    std::string problems_path;
    std::string mode = "didactic";
    int max_turns = 0; // 0 = keep config value
    int workers = 0;
    std::optional<uint64_t> seed;
    std::string out;
};

Config effective_config(const CommonOptions& options) {
    Config config = options.config_path.empty() ? Config{} : load_config(options.config_path);
    if (config.student.kind == BackendConfig::Kind::Unset) {
        config.student.kind = BackendConfig::Kind::SyntheticStudent;
    }
    if (config.teacher.kind == BackendConfig::Kind::Unset) {
        config.teacher.kind = BackendConfig::Kind::SyntheticTeacher;
    }
    if (options.max_turns > 0) {
        config.episode.max_turns = options.max_turns;
    }
    if (options.seed) {
        config.episode.seed = *options.seed;
    }
    if (options.workers > 0) {
        config.worker_limit = options.workers;
    }
    return config;
}

std::unique_ptr<ProgramRunner> make_runner(const Config& config) {
    if (!config.runner) {
        return nullptr;
    }
    return std::make_unique<SubprocessRunner>(*config.runner);
}

int run_command(const CommonOptions& options, const std::string& problem_id) {
    const Config config = effective_config(options);
    const auto problems = load_problems_jsonl(options.problems_path);
    if (problems.empty()) {
        throw std::runtime_error("problems file is empty");
    }
    const Problem* problem = &problems.front();
    if (!problem_id.empty()) {
        problem = nullptr;
        for (const auto& candidate : problems) {
            if (candidate.id == problem_id) {
                problem = &candidate;
                break;
            }
        }
        if (problem == nullptr) {
            throw std::runtime_error("no problem with id '" + problem_id + "'");
        }
    }

    const EpisodeMode mode = parse_mode(options.mode);
    const uint64_t episode_seed = derive_seed(config.episode.seed, problem->id);
    EpisodeConfig episode_config = config.episode;
    episode_config.seed = episode_seed;
    EquivalencePolicy policy = config.verifier;
    policy.seed = derive_seed(episode_seed, "verify");
    auto runner = make_runner(config);

    auto student = make_backend(config.student, *problem, derive_seed(episode_seed, "student"), config);
    EpisodeRecord record;
    switch (mode) {
    case EpisodeMode::Didactic: {
        auto teacher =
            make_backend(config.teacher, *problem, derive_seed(episode_seed, "teacher"), config);
        record = run_episode(*problem, *student, *teacher, episode_config, policy, runner.get());
        break;
    }
    case EpisodeMode::SingleTurn:
        record = run_single_turn(*problem, *student, episode_config, policy, runner.get());
        break;
    case EpisodeMode::Autodidact:
        record = run_autodidact(*problem, *student, episode_config, policy, runner.get());
        break;
    }

    std::cout << "=== " << record.problem_id << " (" << to_string(record.mode) << ") ===\n";
    size_t verdict_index = 0;
    size_t flag_index = 0;
    for (const auto& utterance : record.utterances) {
        std::cout << "[" << to_string(utterance.role) << "#" << utterance.turn_index << "] "
                  << utterance.text << "\n";
        if (utterance.role == Role::Student && verdict_index < record.verdicts.size()) {
            const Verdict& verdict = record.verdicts[verdict_index++];
            std::cout << "  verdict: " << (verdict.correct ? "correct" : "incorrect") << " ("
                      << to_string(verdict.method) << ") " << verdict.detail << "\n";
        }
        if (utterance.role == Role::Teacher && utterance.turn_index > 0 &&
            flag_index < record.leak_flags.size()) {
            const LeakFlag& flag = record.leak_flags[flag_index++];
            if (flag.flagged) {
                std::cout << "  leak flag: " << to_string(flag.stage) << " evidence \""
                          << flag.evidence << "\"\n";
            }
        }
    }
    std::cout << "reward " << record.reward << ", termination "
              << to_string(record.termination.kind);
    if (record.termination.kind == TerminationKind::SolvedAtTurn) {
        std::cout << " (turn " << record.termination.turn << ")";
    }
    if (!record.termination.detail.empty()) {
        std::cout << " [" << record.termination.detail << "]";
    }
    std::cout << "\n";
    return 0;
}

int bench_command(const CommonOptions& options, const std::string& csv_path_option) {
    const Config config = effective_config(options);
    BenchmarkSpec spec;
    spec.problems = load_problems_jsonl(options.problems_path);
    spec.episode_config = config.episode;
    spec.mode = parse_mode(options.mode);
    spec.worker_limit = config.worker_limit;
    spec.seed = config.episode.seed;
    spec.policy = config.verifier;

    auto runner = make_runner(config);
    const auto records = run_benchmark(spec, make_backend_factory(config.student, config),
                                       make_backend_factory(config.teacher, config), runner.get());

    const std::string store_path = options.out.empty() ? config.store_path : options.out;
    std::filesystem::remove(store_path);
    TrajectoryStore store(store_path);
    for (const auto& record : records) {
        store.record(record);
    }

    std::string csv_path = csv_path_option;
    if (csv_path.empty()) {
        csv_path = std::filesystem::path(store_path).replace_extension(".csv").string();
    }
    const auto curve = cumulative_accuracy(records, spec.episode_config.max_turns);
    emit_csv({{options.mode, curve}}, csv_path);

    const auto leaks = leakage_report(records);
    std::cout << "recorded " << records.size() << " episodes to " << store_path << "\n";
    std::cout << "curve written to " << csv_path << "\n";
    std::cout << "final-turn accuracy " << curve.values.back() << ", leak rate " << leaks.rate
              << "\n";
    return 0;
}

int audit_command(const std::string& config_path, const std::string& store_path,
                  const std::string& out_path) {
    Config config = config_path.empty() ? Config{} : load_config(config_path);
    if (config.judge.kind == BackendConfig::Kind::Unset) {
        throw std::runtime_error("audit needs a judge backend in the config");
    }
    const auto episodes = TrajectoryStore::load(store_path);
    const std::string prompt = load_template(config.judge_prompt_path, judge_prompt_template());

    size_t total = 0;
    size_t string_flagged = 0;
    size_t judge_flagged = 0;
    std::vector<std::string> flagged_ids;
    Problem dummy;
    for (const auto& stored : episodes) {
        const EpisodeRecord& record = stored.record;
        auto judge = make_backend(config.judge, dummy, derive_seed(0, stored.id), config);
        const std::string truth = privileged_payload_text(record.privileged);
        size_t flag_index = 0;
        bool any = false;
        for (const auto& utterance : record.utterances) {
            if (utterance.role != Role::Teacher || utterance.turn_index == 0) {
                continue;
            }
            ++total;
            LeakFlag flag;
            if (flag_index < record.leak_flags.size()) {
                flag = record.leak_flags[flag_index];
            }
            ++flag_index;
            if (flag.flagged) {
                ++string_flagged;
                any = true;
                continue;
            }
            const LeakFlag judged =
                judge_hook(record.problem_text, truth, utterance.text, *judge, prompt);
            if (judged.flagged) {
                ++judge_flagged;
                any = true;
            }
        }
        if (any) {
            flagged_ids.push_back(stored.id);
        }
    }

    nlohmann::json report;
    report["total_teacher_turns"] = total;
    report["string_flagged"] = string_flagged;
    report["judge_flagged"] = judge_flagged;
    report["rate"] = total == 0 ? 0.0
                                : static_cast<double>(string_flagged + judge_flagged) /
                                      static_cast<double>(total);
    report["flagged_episodes"] = flagged_ids;
    const std::string text = report.dump(2);
    std::cout << text << "\n";
    if (!out_path.empty()) {
        std::ofstream out(out_path, std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open " + out_path);
        }
        out << text << "\n";
    }
    return 0;
}

int export_command(const std::string& store_path, const std::string& view,
                   const std::string& out_path) {
    const auto episodes = TrajectoryStore::load(store_path);
    if (view == "student") {
        export_student_view(episodes, out_path);
    } else if (view == "worldmodel") {
        export_worldmodel_view(episodes, out_path);
    } else {
        throw std::runtime_error("unknown view '" + view + "' (student|worldmodel)");
    }
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

int report_command(const std::string& store_path, const std::string& csv_path,
                   const std::string& json_path) {
    const auto episodes = TrajectoryStore::load(store_path);
    if (episodes.empty()) {
        throw std::runtime_error("store is empty");
    }
    std::vector<EpisodeRecord> records;
    records.reserve(episodes.size());
    int max_turns = 1;
    for (const auto& stored : episodes) {
        max_turns = std::max(max_turns, stored.record.config.max_turns);
        records.push_back(stored.record);
    }
    const auto curve = cumulative_accuracy(records, max_turns);
    const auto leaks = leakage_report(records);

    if (!csv_path.empty()) {
        emit_csv({{"accuracy", curve}}, csv_path);
    }
    nlohmann::json summary;
    summary["n"] = curve.denominator;
    summary["curve"] = curve.values;
    summary["leak_rate"] = leaks.rate;
    const std::string text = summary.dump(2);
    std::cout << text << "\n";
    if (!json_path.empty()) {
        std::ofstream out(json_path, std::ios::trunc);
        if (!out) {
            throw std::runtime_error("cannot open " + json_path);
        }
        out << text << "\n";
    }
    return 0;
}

void write_learning_curve(const std::vector<double>& curve, long block, const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot open " + path);
    }
    out << "episodes,mean_reward\n";
    char buffer[48];
    for (size_t i = 0; i < curve.size(); ++i) {
        std::snprintf(buffer, sizeof(buffer), "%ld,%.6f\n", static_cast<long>(i + 1) * block,
                      curve[i]);
        out << buffer;
    }
}

lab::ToyMode parse_toy_mode(const std::string& text) {
    if (text == "didactic") return lab::ToyMode::Didactic;
    if (text == "single") return lab::ToyMode::SingleTurn;
    if (text == "autodidact") return lab::ToyMode::Autodidact;
    throw std::runtime_error("unknown lab mode '" + text + "' (didactic|single|autodidact|repeat)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"didact: didactic teacher-student interactions with verifiable rewards"};
    app.name("didact");
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "print help for every subcommand");

    CommonOptions options;
    std::string problem_id;
    std::string view = "student";
    std::string store_path;
    std::string csv_path;
    std::string json_path;

    auto add_common = [&options](CLI::App* cmd, bool with_problems) {
        cmd->add_option("--config", options.config_path, "JSON config file");
        if (with_problems) {
            cmd->add_option("--problems", options.problems_path, "problems JSONL file")->required();
        }
        cmd->add_option("--mode", options.mode, "didactic|single|autodidact");
        cmd->add_option("--max-turns", options.max_turns, "student attempts allowed");
        cmd->add_option("--seed", options.seed, "base seed");
        cmd->add_option("--workers", options.workers, "parallel episode workers");
    };

    auto* run_cmd = app.add_subcommand("run", "run one episode and print the transcript");
    add_common(run_cmd, true);
    run_cmd->add_option("--id", problem_id, "problem id (default: first in the file)");

    auto* bench_cmd = app.add_subcommand("bench", "run a problem set into a store and a curve CSV");
    add_common(bench_cmd, true);
    bench_cmd->add_option("--out", options.out, "store path (overwritten)");
    bench_cmd->add_option("--csv", csv_path, "curve CSV path (default: store path with .csv)");

    auto* audit_cmd = app.add_subcommand("audit", "offline judge pass over a store");
    audit_cmd->add_option("--config", options.config_path, "JSON config file (judge backend)");
    audit_cmd->add_option("--store", store_path, "episode store")->required();
    audit_cmd->add_option("--out", options.out, "report JSON path");

    auto* export_cmd = app.add_subcommand("export", "export RL training data from a store");
    export_cmd->add_option("--store", store_path, "episode store")->required();
    export_cmd->add_option("--view", view, "student|worldmodel")->required();
    export_cmd->add_option("--out", options.out, "output JSONL path")->required();

    auto* report_cmd = app.add_subcommand("report", "accuracy curve and leakage summary");
    report_cmd->add_option("--store", store_path, "episode store")->required();
    report_cmd->add_option("--csv", csv_path, "curve CSV path");
    report_cmd->add_option("--json", json_path, "summary JSON path");

    auto* lab_cmd = app.add_subcommand("lab", "tabular meta-RL laboratory");
    lab_cmd->require_subcommand(1);

    struct LabOptions {
        int n = 16;
        int turns = 6;
        long episodes = 500000;
        double lr = 0.05;
        uint64_t seed = 1;
        int batch = 64;
        long eval_episodes = 20000;
        int seeds = 20;
        int instances = 50;
        std::string regime = "rl2f";
        std::string mode = "didactic";
        std::string theta_path;
        std::string phi_path;
        std::string out;
        std::string curve_path;
    } lab_options;

    auto add_lab_common = [&lab_options](CLI::App* cmd) {
        cmd->add_option("--n", lab_options.n, "answer space size");
        cmd->add_option("--turns", lab_options.turns, "max turns");
        cmd->add_option("--seed", lab_options.seed, "seed");
    };

    auto* lab_train = lab_cmd->add_subcommand("train", "train theta (rl2f|single) or phi (worldmodel)");
    add_lab_common(lab_train);
    lab_train->add_option("--regime", lab_options.regime, "rl2f|single|worldmodel");
    lab_train->add_option("--episodes", lab_options.episodes, "training episodes");
    lab_train->add_option("--lr", lab_options.lr, "learning rate");
    lab_train->add_option("--batch", lab_options.batch, "batch size");
    lab_train->add_option("--out", lab_options.out, "parameter JSON path")->required();
    lab_train->add_option("--curve", lab_options.curve_path, "learning-curve CSV path");

    auto* lab_eval = lab_cmd->add_subcommand("eval", "Monte-Carlo cumulative accuracy of a policy");
    add_lab_common(lab_eval);
    lab_eval->add_option("--theta", lab_options.theta_path, "theta JSON")->required();
    lab_eval->add_option("--phi", lab_options.phi_path, "phi JSON (autodidact mode)");
    lab_eval->add_option("--mode", lab_options.mode, "didactic|single|autodidact|repeat");
    lab_eval->add_option("--episodes", lab_options.eval_episodes, "evaluation episodes");
    lab_eval->add_option("--out", lab_options.out, "curve CSV path");

    auto* lab_gradcheck =
        lab_cmd->add_subcommand("gradcheck", "analytic gradients vs central finite differences");
    lab_gradcheck->add_option("--instances", lab_options.instances, "random instances");
    lab_gradcheck->add_option("--seed", lab_options.seed, "seed");

    auto* lab_compare = lab_cmd->add_subcommand(
        "compare", "train rl2f vs single-turn across seeds and test the ordering");
    add_lab_common(lab_compare);
    lab_compare->add_option("--episodes", lab_options.episodes, "training episodes per run");
    lab_compare->add_option("--lr", lab_options.lr, "learning rate");
    lab_compare->add_option("--seeds", lab_options.seeds, "number of seeds");
    lab_compare->add_option("--eval-episodes", lab_options.eval_episodes, "evaluation episodes");
    lab_compare->add_option("--out", lab_options.out, "mean-curve CSV path");

    try {
        app.parse(argc, argv);

        if (run_cmd->parsed()) {
            return run_command(options, problem_id);
        }
        if (bench_cmd->parsed()) {
            return bench_command(options, csv_path);
        }
        if (audit_cmd->parsed()) {
            return audit_command(options.config_path, store_path, options.out);
        }
        if (export_cmd->parsed()) {
            return export_command(store_path, view, options.out);
        }
        if (report_cmd->parsed()) {
            return report_command(store_path, csv_path, json_path);
        }
        if (lab_cmd->parsed()) {
            lab::ToyConfig config{lab_options.n, lab_options.turns, lab_options.seed};
            if (lab_train->parsed()) {
                if (lab_options.regime == "worldmodel") {
                    const auto phi = lab::train_worldmodel(config, lab_options.episodes,
                                                           lab_options.lr, lab_options.seed,
                                                           lab_options.batch);
                    lab::save_phi(phi, lab_options.out);
                    std::cout << "phi written to " << lab_options.out << "\n";
                    return 0;
                }
                const auto regime = lab_options.regime == "single" ? lab::TrainRegime::SingleTurnRL
                                                                   : lab::TrainRegime::RL2F;
                if (lab_options.regime != "single" && lab_options.regime != "rl2f") {
                    throw std::runtime_error("unknown regime '" + lab_options.regime +
                                             "' (rl2f|single|worldmodel)");
                }
                lab::TrainOptions train_options;
                train_options.batch_size = lab_options.batch;
                const auto result = lab::train(config, regime, lab_options.episodes, lab_options.lr,
                                               lab_options.seed, train_options);
                lab::save_theta(result.theta, lab_options.out);
                std::cout << "theta written to " << lab_options.out << "\n";
                if (!lab_options.curve_path.empty()) {
                    write_learning_curve(result.curve, train_options.curve_block,
                                         lab_options.curve_path);
                    std::cout << "learning curve written to " << lab_options.curve_path << "\n";
                }
                std::cout << "final block mean reward " << result.curve.back() << "\n";
                return 0;
            }
            if (lab_eval->parsed()) {
                const auto theta = lab::load_theta(lab_options.theta_path);
                lab::ToyConfig eval_config = config;
                eval_config.answer_count = theta.n;
                CumulativeAccuracyCurve curve;
                if (lab_options.mode == "repeat") {
                    curve = lab::evaluate_repeat_baseline(theta, eval_config,
                                                          lab_options.eval_episodes,
                                                          lab_options.seed);
                } else {
                    const auto mode = parse_toy_mode(lab_options.mode);
                    lab::Phi phi;
                    const lab::Phi* phi_ptr = nullptr;
                    if (mode == lab::ToyMode::Autodidact) {
                        if (lab_options.phi_path.empty()) {
                            throw std::runtime_error("autodidact eval needs --phi");
                        }
                        phi = lab::load_phi(lab_options.phi_path);
                        phi_ptr = &phi;
                    }
                    curve = lab::evaluate(theta, mode, eval_config, lab_options.eval_episodes,
                                          lab_options.seed, phi_ptr);
                }
                for (size_t t = 0; t < curve.values.size(); ++t) {
                    std::cout << "turn " << t + 1 << ": " << curve.values[t] << "\n";
                }
                if (!lab_options.out.empty()) {
                    emit_csv({{lab_options.mode, curve}}, lab_options.out);
                    std::cout << "curve written to " << lab_options.out << "\n";
                }
                return 0;
            }
            if (lab_gradcheck->parsed()) {
                const auto result = lab::gradient_check(lab_options.instances, lab_options.seed);
                std::cout << "theta max relative error: " << result.theta_max_rel_error << "\n";
                std::cout << "phi max relative error:   " << result.phi_max_rel_error << "\n";
                const bool ok =
                    result.theta_max_rel_error < 1e-4 && result.phi_max_rel_error < 1e-4;
                std::cout << (ok ? "gradcheck passed" : "gradcheck FAILED") << "\n";
                return ok ? 0 : 2;
            }
            if (lab_compare->parsed()) {
                const auto study = lab::run_ordering_study(
                    config, lab_options.episodes, lab_options.seeds, lab_options.lr,
                    lab_options.eval_episodes, lab_options.seed,
                    [](const std::string& message) { std::cerr << message << "\n"; });
                std::cout << "turn:";
                for (size_t t = 0; t < study.mean_rl2f.size(); ++t) {
                    std::cout << " " << t + 1;
                }
                std::cout << "\nrl2f:  ";
                for (double v : study.mean_rl2f) {
                    std::cout << " " << v;
                }
                std::cout << "\nsingle:";
                for (double v : study.mean_single) {
                    std::cout << " " << v;
                }
                std::cout << "\nfinal-turn sign test: wins " << study.final_turn_test.wins
                          << ", losses " << study.final_turn_test.losses << ", ties "
                          << study.final_turn_test.ties << ", p "
                          << study.final_turn_test.p_value << "\n";
                std::cout << "autodidact vs repeat at final turn: successes "
                          << study.autodidact_successes << "/" << lab_options.seeds << ", p "
                          << study.autodidact_p_value << "\n";
                std::cout << (study.ordering_holds ? "ordering holds" : "ordering FAILED") << "\n";
                if (!lab_options.out.empty()) {
                    CumulativeAccuracyCurve rl2f{study.mean_rl2f, static_cast<size_t>(lab_options.seeds)};
                    CumulativeAccuracyCurve single{study.mean_single,
                                                   static_cast<size_t>(lab_options.seeds)};
                    emit_csv({{"rl2f", rl2f}, {"single_turn", single}}, lab_options.out);
                    std::cout << "mean curves written to " << lab_options.out << "\n";
                }
                return study.ordering_holds ? 0 : 2;
            }
        }
        return 1;
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
