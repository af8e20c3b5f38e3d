#include <atomic>
#include <chrono>
#include <csignal>
#include <deque>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "honeypot/evalsuite.hpp"
#include "honeypot/generator.hpp"
#include "honeypot/runtime.hpp"
#include "honeypot/sim/plant.hpp"
#include "honeypot/timeseries.hpp"
#include "settings.hpp"

namespace {

using namespace honeypot;
using cli::Settings;
using cli::UsageError;
using Json = nlohmann::ordered_json;

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

struct Command {
    CLI::App* app = nullptr;
    std::unique_ptr<Settings> settings;
    std::string config;
    std::string profile;
    bool json = false;
    bool verbose = false;
    std::function<int(Command&)> run;
};

std::string num(double v) { return ts::format_double(v); }
std::string num(std::size_t v) { return std::to_string(v); }

void print_json(const Json& j) { std::cout << j.dump(2) << '\n'; }

runtime::SeedSource seed_source(const Settings& s) {
    if (s.has("seed-csv")) return runtime::CsvSeed{s.str("seed-csv")};
    runtime::SimulatorSeed sim{s.u64("seed"), std::nullopt};
    if (s.has("plant-config")) sim.config = s.str("plant-config");
    return sim;
}

ts::Dataset held_out(const ts::Dataset& data, double train_fraction) {
    if (train_fraction <= 0.0) return data;
    return ts::split(data, train_fraction).second;
}

// ------------------------------------------------------------------ simulate

int run_simulate(Command& c) {
    const auto& s = *c.settings;
    auto [params, schedule] = s.has("plant-config")
                                  ? sim::load_sim_config(std::filesystem::path(s.str("plant-config")))
                                  : std::pair{sim::PlantParams{}, sim::SequenceSchedule::default_cycle()};
    const auto ds = sim::run_cycle(params, schedule, s.num("duration"), s.num("rate"), s.u64("seed"));
    ts::write_csv(ds, s.str("out"));
    if (c.json) {
        print_json({{"frames", ds.size()}, {"rate_hz", ds.rate_hz}, {"out", s.str("out")}});
    } else {
        std::cout << "wrote " << ds.size() << " frames at " << num(ds.rate_hz) << " Hz to " << s.str("out") << '\n';
    }
    return 0;
}

// ------------------------------------------------------------------ train

int run_train(Command& c) {
    const auto& s = *c.settings;
    if (!s.has("data")) throw UsageError("train: --data is required");
    const auto data = ts::read_csv(s.str("data"), s.num("rate"));

    gen::CompositeTrainConfig cfg;
    cfg.lookback = s.count("lookback");
    cfg.lookahead = s.count("lookahead");
    cfg.hidden = s.count("hidden");
    cfg.stride = s.count("stride");
    cfg.train_fraction = s.num("train-fraction");
    cfg.threads = s.count("threads");
    cfg.train.epochs = s.count("epochs");
    cfg.train.lr = s.num("lr");
    cfg.train.batch_size = s.count("batch");
    cfg.train.seed = s.u64("seed");

    const bool verbose = c.verbose;
    const auto result = gen::train_composite(data, cfg, [&](std::size_t var, std::size_t epoch, double tr, double va) {
        if (verbose && (epoch == 0 || (epoch + 1) % 10 == 0 || epoch + 1 == cfg.train.epochs)) {
            std::cerr << ts::kVarNames[var] << " epoch " << epoch + 1 << " train " << num(tr) << " val " << num(va)
                      << '\n';
        }
    });

    const std::filesystem::path out = s.str("out");
    const auto manifest = gen::save_composite(result.models, result.scaler, data.rate_hz, out);

    std::ofstream report(out / "train_report.csv");
    report << "variable,epoch,train_mse,validation_mse\n";
    for (std::size_t k = 0; k < ts::kReplicated; ++k) {
        const auto& r = result.reports[k];
        for (std::size_t e = 0; e < r.epochs; ++e) {
            report << ts::kVarNames[k] << ',' << e + 1 << ',' << num(r.train_mse[e]) << ','
                   << (e < r.validation_mse.size() ? num(r.validation_mse[e]) : std::string()) << '\n';
        }
    }

    Json j;
    j["manifest"] = manifest.string();
    j["train_windows"] = result.train_windows;
    j["validation_windows"] = result.validation_windows;
    for (std::size_t k = 0; k < ts::kReplicated; ++k) {
        const auto& r = result.reports[k];
        j["variables"][std::string(ts::kVarNames[k])] = {
            {"first_train_mse", r.train_mse.front()},
            {"final_train_mse", r.train_mse.back()},
            {"final_validation_mse", r.validation_mse.empty() ? Json(nullptr) : Json(r.validation_mse.back())}};
    }
    if (c.json) {
        print_json(j);
    } else {
        std::cout << "trained 8 models on " << result.train_windows << " windows; manifest " << manifest.string()
                  << '\n';
        for (std::size_t k = 0; k < ts::kReplicated; ++k) {
            const auto& r = result.reports[k];
            std::cout << "  " << ts::kVarNames[k] << ": train MSE " << num(r.train_mse.front()) << " -> "
                      << num(r.train_mse.back()) << '\n';
        }
    }
    return 0;
}

// ------------------------------------------------------------------ generate

gen::CompositeGenerator load_generator(const Settings& s, bool single_step = false) {
    if (!s.has("manifest")) throw UsageError("--manifest is required");
    auto loaded = gen::load_composite(s.str("manifest"));
    return gen::CompositeGenerator(std::move(loaded.models), loaded.manifest.scaler, {single_step, true});
}

double manifest_rate(const Settings& s) { return gen::read_manifest(s.str("manifest")).rate_hz; }

int run_generate(Command& c) {
    const auto& s = *c.settings;
    const auto gen = load_generator(s, s.on("single-step"));
    const double rate = manifest_rate(s);
    const Matrix seed = runtime::init_lookback(seed_source(s), gen.lookback(), rate, gen.scaler());
    const auto segments = gen::generate_trajectory(gen, seed, s.count("segments"));
    const auto ds = gen::to_dataset(segments, rate);
    ts::write_csv(ds, s.str("out"));
    if (c.json) {
        print_json({{"segments", segments.size()},
                    {"frames", ds.size()},
                    {"seconds", static_cast<double>(ds.size()) / rate},
                    {"clamped_values", gen.clamp_count()},
                    {"out", s.str("out")}});
    } else {
        std::cout << "wrote " << segments.size() << " segments (" << ds.size() << " frames, "
                  << num(static_cast<double>(ds.size()) / rate) << " s) to " << s.str("out") << "; clamped "
                  << gen.clamp_count() << " values\n";
    }
    return 0;
}

// ------------------------------------------------------------------ evaluate

int run_evaluate(Command& c) {
    const auto& s = *c.settings;
    if (!s.has("data")) throw UsageError("evaluate: --data is required");
    const auto gen = load_generator(s);
    const auto validation = held_out(ts::read_csv(s.str("data"), manifest_rate(s)), s.num("train-fraction"));

    eval::EvalOptions opt;
    opt.seeds = s.count("seeds");
    opt.segments = s.count("segments");
    opt.rng_seed = s.u64("seed");
    opt.threads = std::max<std::size_t>(1, s.count("threads"));
    const auto table = eval::evaluate(gen, validation, opt);
    {
        std::ofstream out(s.str("out"), std::ios::binary);
        out << eval::format_rmse_csv(table);
        if (!out) throw std::runtime_error("cannot write " + s.str("out"));
    }
    const auto problems = eval::check_table(table);
    const auto accumulating = eval::accumulating_variables(table);

    if (c.json) {
        Json j;
        j["seeds"] = table.seeds;
        j["segments"] = table.steps();
        j["quantiles"] = {table.lower_p, 0.5, table.upper_p};
        j["accumulating_variables"] = accumulating;
        j["check_failures"] = problems;
        for (std::size_t v = 0; v < ts::kReplicated; ++v) {
            j["first_step_median"][std::string(ts::kVarNames[v])] = table.cells.front()[v].median;
            j["last_step_median"][std::string(ts::kVarNames[v])] = table.cells.back()[v].median;
        }
        j["out"] = s.str("out");
        print_json(j);
    } else {
        std::cout << "RMSE over " << table.seeds << " seeds x " << table.steps() << " segments written to "
                  << s.str("out") << '\n';
        for (std::size_t v = 0; v < ts::kReplicated; ++v) {
            std::cout << "  " << ts::kVarNames[v] << ": step 1 median " << num(table.cells.front()[v].median)
                      << ", step " << table.steps() << " median " << num(table.cells.back()[v].median) << '\n';
        }
        std::cout << "error grows from first to last step for " << accumulating << " of 8 variables\n";
        for (const auto& p : problems) std::cerr << "check failed: " << p << '\n';
    }
    return (s.on("check") && !problems.empty()) ? 1 : 0;
}

// ------------------------------------------------------------------ bench

int run_bench(Command& c) {
    const auto& s = *c.settings;
    const auto gen = load_generator(s);
    const Matrix seed = runtime::init_lookback(seed_source(s), gen.lookback(), manifest_rate(s), gen.scaler());
    SteadyClock clock;
    const auto st = eval::bench_producer(gen, seed, s.count("n"), clock);
    if (c.json) {
        print_json({{"n", st.n}, {"min_s", st.min}, {"mean_s", st.mean}, {"max_s", st.max}});
    } else {
        std::cout << "producer step over n=" << st.n << ": min " << num(st.min) << " s, mean " << num(st.mean)
                  << " s, max " << num(st.max) << " s\n";
    }
    return 0;
}

// ------------------------------------------------------------------ serve

int run_serve(Command& c) {
    const auto& s = *c.settings;
    if (!s.has("manifest")) throw UsageError("serve: --manifest is required");
    runtime::RuntimeConfig rc;
    rc.manifest = s.str("manifest");
    rc.seed = seed_source(s);
    rc.publish_rate_hz = s.num("rate");
    rc.queue_capacity = s.count("queue");
    rc.host = s.str("host");
    const auto port = s.u64("port");
    if (port > 65535) throw UsageError("--port must be <= 65535");
    rc.port = static_cast<std::uint16_t>(port);
    rc.intrusion_log = s.str("log");
    rc.log_reads = s.on("log-reads");

    std::signal(SIGTERM, on_signal);
    std::signal(SIGINT, on_signal);

    runtime::Honeypot pot(rc);
    pot.start();
    (c.json ? std::cerr : std::cout) << pot.status_line() << std::endl;

    const double limit = s.num("duration");
    const auto started = std::chrono::steady_clock::now();
    while (!g_stop.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(20));
        if (pot.producer_error()) break;
        if (limit > 0 && std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count() >= limit) {
            break;
        }
    }
    pot.stop();
    if (auto err = pot.producer_error()) std::rethrow_exception(err);
    const auto& st = pot.stats();
    if (c.json) {
        print_json({{"rows", st.rows.load()},
                    {"segments", st.segments.load()},
                    {"underruns", st.underruns.load()},
                    {"median_interval_s", st.median_interval()},
                    {"logged_events", pot.log().total()}});
    } else {
        std::cout << "stopped after " << st.rows.load() << " published rows, " << st.underruns.load()
                  << " underruns, median interval " << num(st.median_interval() * 1e3) << " ms, "
                  << pot.log().total() << " logged events" << std::endl;
    }
    return 0;
}

// ------------------------------------------------------------------ wiring

Command& add_command(CLI::App& app, std::deque<Command>& commands, const std::string& name, const std::string& about,
                     std::function<int(Command&)> run) {
    auto& c = commands.emplace_back();
    c.app = app.add_subcommand(name, about);
    c.settings = std::make_unique<Settings>(c.app);
    c.run = std::move(run);
    c.app->add_option("--config", c.config, "key = value file; flags override it");
    c.app->add_option("--profile", c.profile, "parameter preset: full (default) or desk");
    c.app->add_flag("--json", c.json, "machine-readable summary on stdout");
    c.app->add_flag("-v,--verbose", c.verbose, "progress output on stderr");
    c.settings->option("seed", "global seed", [](const Profile&) { return std::string("42"); });
    return c;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generative honeypot for a twin-rotor CPS: simulate, train, generate, evaluate, bench, serve"};
    app.require_subcommand(1);
    std::deque<Command> commands;

    {
        auto& c = add_command(app, commands, "simulate", "run the closed-loop plant and write a CSV", run_simulate);
        auto& s = *c.settings;
        s.option("out", "output CSV", [](const Profile&) { return std::string("sim.csv"); });
        s.option("duration", "seconds to simulate", [](const Profile& p) { return num(p.duration_s); });
        s.option("rate", "sample rate in Hz", [](const Profile& p) { return num(p.rate_hz); });
        s.option("plant-config", "plant/schedule key = value file", [](const Profile&) { return std::string(); });
    }
    {
        auto& c = add_command(app, commands, "train", "train the eight forecasting models", run_train);
        auto& s = *c.settings;
        s.option("data", "training CSV", [](const Profile&) { return std::string(); });
        s.option("out", "output directory for models and manifest", [](const Profile&) { return std::string("model"); });
        s.option("rate", "sample rate assumed for single-row CSVs", [](const Profile& p) { return num(p.rate_hz); });
        s.option("lookback", "look-back L in samples", [](const Profile& p) { return num(p.lookback); });
        s.option("lookahead", "look-ahead H in samples", [](const Profile& p) { return num(p.lookahead); });
        s.option("hidden", "LSTM hidden size", [](const Profile& p) { return num(p.hidden); });
        s.option("epochs", "training epochs", [](const Profile& p) { return num(p.epochs); });
        s.option("lr", "Adam learning rate", [](const Profile& p) { return num(p.lr); });
        s.option("batch", "mini-batch size", [](const Profile& p) { return num(p.batch); });
        s.option("stride", "window stride in samples", [](const Profile& p) { return num(p.stride); });
        s.option("train-fraction", "leading share of the CSV used for training", [](const Profile& p) {
            return num(p.train_fraction);
        });
        s.option("threads", "parallel model trainings (0 = all cores)", [](const Profile&) { return std::string("0"); });
    }
    {
        auto& c = add_command(app, commands, "generate", "generate a trajectory from a trained composite", run_generate);
        auto& s = *c.settings;
        s.option("manifest", "composite manifest", [](const Profile&) { return std::string(); });
        s.option("segments", "number of look-ahead segments", [](const Profile& p) { return num(p.generate_segments); });
        s.option("out", "output CSV", [](const Profile&) { return std::string("generated.csv"); });
        s.option("seed-csv", "seed look-back CSV (default: simulator)", [](const Profile&) { return std::string(); });
        s.option("plant-config", "plant config for the simulator seed", [](const Profile&) { return std::string(); });
        s.flag("single-step", "recurse one sample at a time");
    }
    {
        auto& c = add_command(app, commands, "evaluate", "RMSE protocol over random seed trajectories", run_evaluate);
        auto& s = *c.settings;
        s.option("manifest", "composite manifest", [](const Profile&) { return std::string(); });
        s.option("data", "recording CSV; its validation tail is used", [](const Profile&) { return std::string(); });
        s.option("train-fraction", "leading share skipped (0 = use the whole CSV)", [](const Profile& p) {
            return num(p.train_fraction);
        });
        s.option("seeds", "number of seed trajectories T", [](const Profile& p) { return num(p.eval_seeds); });
        s.option("segments", "segments per trajectory S", [](const Profile& p) { return num(p.eval_segments); });
        s.option("out", "long-form RMSE CSV", [](const Profile&) { return std::string("rmse.csv"); });
        s.option("threads", "parallel seed evaluations", [](const Profile&) { return std::string("1"); });
        s.flag("check", "exit 1 if the table violates its invariants");
    }
    {
        auto& c = add_command(app, commands, "bench", "time the producer step", run_bench);
        auto& s = *c.settings;
        s.option("manifest", "composite manifest", [](const Profile&) { return std::string(); });
        s.option("n", "timed producer steps", [](const Profile& p) { return num(p.bench_n); });
        s.option("seed-csv", "seed look-back CSV (default: simulator)", [](const Profile&) { return std::string(); });
        s.option("plant-config", "plant config for the simulator seed", [](const Profile&) { return std::string(); });
    }
    {
        auto& c = add_command(app, commands, "serve", "run the decoy OPC UA server", run_serve);
        auto& s = *c.settings;
        s.option("manifest", "composite manifest", [](const Profile&) { return std::string(); });
        s.option("seed-csv", "seed look-back CSV (default: simulator)", [](const Profile&) { return std::string(); });
        s.option("plant-config", "plant config for the simulator seed", [](const Profile&) { return std::string(); });
        s.option("host", "listen address", [](const Profile&) { return std::string("0.0.0.0"); });
        s.option("port", "listen port", [](const Profile&) { return std::string("4840"); });
        s.option("rate", "publish rate in Hz", [](const Profile& p) { return num(p.publish_rate_hz); });
        s.option("queue", "segment queue capacity", [](const Profile&) { return std::string("4"); });
        s.option("log", "intrusion log file (JSON lines)", [](const Profile&) { return std::string("intrusion.log"); });
        s.option("duration", "stop after this many seconds (0 = until SIGTERM)", [](const Profile&) {
            return std::string("0");
        });
        s.flag("log-reads", "also log Browse and Read requests");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help();
        return 2;
    }

    for (auto& c : commands) {
        if (!c.app->parsed()) continue;
        try {
            c.settings->resolve(c.config, c.profile);
            c.settings->print(c.json ? std::cerr : std::cout);
            return c.run(c);
        } catch (const UsageError& e) {
            std::cerr << "usage error: " << e.what() << "\n\n" << c.app->help();
            return 2;
        } catch (const std::exception& e) {
            std::cerr << "error: " << e.what() << '\n';
            return 1;
        }
    }
    return 2;
}
