// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails. Usage: honeypot_acceptance <work-dir>

#include <fcntl.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "honeypot/generator.hpp"
#include "honeypot/lstm/model.hpp"
#include "honeypot/lstm/optim.hpp"
#include "honeypot/opcua/client.hpp"
#include "honeypot/opcua/server.hpp"
#include "honeypot/opcua/status.hpp"
#include "honeypot/rng.hpp"
#include "honeypot/timeseries.hpp"
#include "random_opcua.hpp"

extern char** environ;

namespace fs = std::filesystem;
using nlohmann::json;
using namespace honeypot;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) { return std::chrono::duration<double>(Clock::now() - start).count(); }

std::string fmt(double v, int precision = 3) {
    std::ostringstream out;
    out.precision(precision);
    out << v;
    return out.str();
}

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int criterion, const Outcome& o) {
    if (!o.pass) ++failures;
    std::cout << "criterion " << criterion << ": " << (o.pass ? "PASS" : "FAIL") << " - " << o.detail << std::endl;
}

Outcome guarded(const std::function<Outcome()>& f) {
    try {
        return f();
    } catch (const std::exception& e) {
        return {false, std::string("exception: ") + e.what()};
    }
}

std::string read_text(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// ------------------------------------------------------------------ subprocesses

pid_t spawn(const std::vector<std::string>& args, const fs::path& out, const fs::path& err) {
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_addopen(&actions, 1, out.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    posix_spawn_file_actions_addopen(&actions, 2, err.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    std::vector<char*> argv;
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    pid_t pid = 0;
    const int rc = posix_spawn(&pid, argv[0], &actions, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    if (rc != 0) throw std::system_error(rc, std::generic_category(), "posix_spawn " + args[0]);
    return pid;
}

int wait_exit(pid_t pid) {
    int status = 0;
    while (waitpid(pid, &status, 0) < 0) {
        if (errno != EINTR) throw std::system_error(errno, std::generic_category(), "waitpid");
    }
    return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
}

struct CliResult {
    int code = -1;
    double seconds = 0.0;
    json summary;
    fs::path err;
};

// Runs `honeypot <args> --json`, capturing stdout/stderr under `dir/<tag>.{out,err}`.
CliResult cli(const fs::path& dir, const std::string& tag, std::vector<std::string> args) {
    args.insert(args.begin(), HONEYPOT_CLI_PATH);
    args.emplace_back("--json");
    CliResult r;
    const auto out = dir / (tag + ".out");
    r.err = dir / (tag + ".err");
    const auto start = Clock::now();
    r.code = wait_exit(spawn(args, out, r.err));
    r.seconds = seconds_since(start);
    if (r.code != 0) {
        throw std::runtime_error(tag + " exited with " + std::to_string(r.code) + ": " + read_text(r.err));
    }
    r.summary = json::parse(read_text(out));
    return r;
}

// ------------------------------------------------------------------ 1, 2: LSTM oracles

double worst_gradient_error(lstm::EncoderDecoderModel model, const Matrix& lookback, const std::vector<double>& target) {
    const double step = 1e-5;
    auto loss = [&] { return lstm::mse(lstm::forward(model, lookback), target); };
    const auto grads = lstm::backward(model, lookback, target);
    const auto g_blocks = lstm::parameter_blocks(grads);
    auto p_blocks = lstm::parameter_blocks(model);
    double worst = 0.0;
    for (std::size_t b = 0; b < p_blocks.size(); ++b) {
        for (std::size_t i = 0; i < p_blocks[b].size(); ++i) {
            const double saved = p_blocks[b][i];
            p_blocks[b][i] = saved + step;
            const double up = loss();
            p_blocks[b][i] = saved - step;
            const double down = loss();
            p_blocks[b][i] = saved;
            const double numeric = (up - down) / (2 * step);
            const double analytic = g_blocks[b][i];
            const double scale = std::max({std::abs(numeric), std::abs(analytic), 1e-6});
            worst = std::max(worst, std::abs(numeric - analytic) / scale);
        }
    }
    return worst;
}

Outcome gradient_check() {
    const auto start = Clock::now();
    Rng rng(20240601);
    double worst = 0.0;
    std::size_t checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const lstm::ModelConfig cfg{8, 4, 5, 3, static_cast<std::size_t>(rng.below(8))};
        const auto model = lstm::init_model(cfg, rng.next());
        Matrix lookback(5, 8);
        for (auto& v : lookback.data()) v = rng.uniform();
        std::vector<double> target(3);
        for (auto& v : target) v = rng.uniform();
        worst = std::max(worst, worst_gradient_error(model, lookback, target));
        checked += model.parameter_count();
    }
    const double secs = seconds_since(start);
    return {worst < 1e-4 && secs < 30.0, "20 models, " + std::to_string(checked) + " parameters, worst relative error " +
                                             fmt(worst) + ", " + fmt(secs) + " s"};
}

Outcome adam_oracle() {
    const double lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double g1 = 2.0;
    const double m1 = (1 - b1) * g1, v1 = (1 - b2) * g1 * g1;
    const double p1 = 1.0 - lr * (m1 / (1 - b1)) / (std::sqrt(v1 / (1 - b2)) + eps);
    const double g2 = 2.0 * p1;
    const double m2 = b1 * m1 + (1 - b1) * g2, v2 = b2 * v1 + (1 - b2) * g2 * g2;
    const double p2 = p1 - lr * (m2 / (1 - b1 * b1)) / (std::sqrt(v2 / (1 - b2 * b2)) + eps);

    std::vector<double> p{1.0};
    lstm::AdamState state;
    state.lr = lr;
    std::vector<double> g{2.0 * p[0]};
    lstm::adam_step(p, g, state);
    const double e1 = std::abs(p[0] - p1);
    g[0] = 2.0 * p[0];
    lstm::adam_step(p, g, state);
    const double e2 = std::abs(p[0] - p2);
    return {e1 <= 1e-12 && e2 <= 1e-12,
            "p1 " + fmt(p1, 17) + " (error " + fmt(e1) + "), p2 " + fmt(p2, 17) + " (error " + fmt(e2) + ")"};
}

// ------------------------------------------------------------------ 3, 4, 5: desk pipeline

struct Pipeline {
    fs::path dir;
    fs::path manifest;
    CliResult simulate, train, generate, evaluate;
};

Pipeline run_pipeline(const fs::path& dir) {
    fs::create_directories(dir);
    Pipeline p;
    p.dir = dir;
    const std::string data = (dir / "sim.csv").string();
    p.simulate = cli(dir, "simulate", {"simulate", "--profile", "desk", "--seed", "42", "--out", data});
    p.train = cli(dir, "train",
                  {"train", "--profile", "desk", "--seed", "42", "--data", data, "--out", (dir / "model").string()});
    p.manifest = p.train.summary.at("manifest").get<std::string>();
    p.generate = cli(dir, "generate",
                     {"generate", "--profile", "desk", "--seed", "42", "--manifest", p.manifest.string(), "--segments",
                      "1200", "--out", (dir / "generated.csv").string()});
    p.evaluate = cli(dir, "evaluate",
                     {"evaluate", "--profile", "desk", "--seed", "42", "--manifest", p.manifest.string(), "--data",
                      data, "--seeds", "301", "--segments", "20", "--out", (dir / "rmse.csv").string()});
    return p;
}

std::vector<std::vector<std::string>> read_csv_rows(const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(read_text(path));
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::string cell;
        std::istringstream ls(line);
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(std::move(cells));
    }
    return rows;
}

Outcome training_converges(const Pipeline& p) {
    const auto rows = read_csv_rows(p.dir / "model" / "train_report.csv");
    if (rows.empty() || rows[0] != std::vector<std::string>{"variable", "epoch", "train_mse", "validation_mse"}) {
        return {false, "unexpected train_report.csv header"};
    }
    std::map<std::string, std::vector<double>> mse;
    for (std::size_t r = 1; r < rows.size(); ++r) mse[rows[r].at(0)].push_back(std::stod(rows[r].at(2)));
    bool ok = mse.size() == ts::kReplicated;
    double worst_ratio = 0.0;
    std::string worst_var;
    for (const auto& name : ts::kVarNames) {
        const auto it = mse.find(std::string(name));
        if (it == mse.end() || it->second.size() != 150) {
            ok = false;
            continue;
        }
        const double ratio = it->second.back() / it->second.front();
        if (!(ratio < 0.2)) ok = false;
        if (ratio > worst_ratio) {
            worst_ratio = ratio;
            worst_var = std::string(name);
        }
    }
    const double total = p.simulate.seconds + p.train.seconds;
    const unsigned cores = std::max(1u, std::thread::hardware_concurrency());
    return {ok && total < 900.0, "8 models x 150 epochs, worst final/first train MSE " + fmt(worst_ratio) + " (" +
                                     worst_var + "), simulate+train " + fmt(total, 4) + " s on " +
                                     std::to_string(cores) + " core(s)"};
}

Outcome generation_bounded(const Pipeline& p) {
    const auto manifest = gen::read_manifest(p.manifest);
    const auto generated = ts::read_csv(p.dir / "generated.csv", manifest.rate_hz);
    const std::size_t expected = 1200 * manifest.lookahead;
    std::size_t outside = 0, values = 0;
    for (const auto& f : generated.frames) {
        for (std::size_t k = 0; k < ts::kReplicated; ++k) {
            const double v = f.replicated(k);
            const auto& r = manifest.scaler.ranges[k];
            ++values;
            if (!(v >= r.min && v <= r.max)) ++outside;
        }
    }
    const bool ok = generated.size() == expected && outside == 0 && p.generate.seconds < 300.0;
    return {ok, std::to_string(generated.size()) + " frames (" + std::to_string(values) + " values), " +
                    std::to_string(outside) + " outside the training range, " + fmt(p.generate.seconds) + " s"};
}

Outcome rmse_protocol(const Pipeline& p) {
    const auto rows = read_csv_rows(p.dir / "rmse.csv");
    if (rows.empty() || rows[0] != std::vector<std::string>{"step", "variable", "median", "q_low", "q_high"}) {
        return {false, "unexpected rmse.csv header"};
    }
    std::map<std::pair<int, std::string>, double> median;
    std::size_t disordered = 0;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const double m = std::stod(rows[r].at(2)), lo = std::stod(rows[r].at(3)), hi = std::stod(rows[r].at(4));
        if (!(lo <= m && m <= hi)) ++disordered;
        median[{std::stoi(rows[r].at(0)), rows[r].at(1)}] = m;
    }
    std::size_t growing = 0;
    for (const auto& name : ts::kVarNames) {
        const std::string v(name);
        if (median.count({20, v}) && median.count({1, v}) && median[{20, v}] > median[{1, v}]) ++growing;
    }
    const bool complete = rows.size() == 1 + 20 * ts::kReplicated && median.size() == 20 * ts::kReplicated &&
                          p.evaluate.summary.at("seeds").get<std::size_t>() == 301;
    return {complete && disordered == 0 && growing >= 6,
            std::to_string(rows.size() - 1) + " cells over 301 seeds, " + std::to_string(disordered) +
                " with quantiles out of order, error grows for " + std::to_string(growing) + " of 8 variables"};
}

// ------------------------------------------------------------------ 6: producer timing

Outcome producer_timing(const Pipeline& desk, const fs::path& work) {
    const auto d = cli(work, "bench_desk", {"bench", "--profile", "desk", "--manifest", desk.manifest.string(), "--n",
                                            "300"});

    std::vector<lstm::EncoderDecoderModel> models;
    for (std::size_t k = 0; k < ts::kReplicated; ++k) {
        models.push_back(lstm::init_model({ts::kReplicated, 64, 2000, 200, k}, 500 + k));
    }
    ts::ScalerParams scaler;
    for (std::size_t k = 0; k < ts::kReplicated; ++k) scaler.ranges[k] = {-30.0, 30.0};
    const auto full_manifest = gen::save_composite(models, scaler, 500.0, work / "full_model");
    const auto p = cli(work, "bench_full", {"bench", "--manifest", full_manifest.string(), "--n", "300"});

    auto ordered = [](const json& j) {
        return j.at("min_s").get<double>() <= j.at("mean_s").get<double>() &&
               j.at("mean_s").get<double>() <= j.at("max_s").get<double>() && j.at("n").get<int>() == 300;
    };
    const double full_mean = p.summary.at("mean_s").get<double>();
    return {ordered(d.summary) && ordered(p.summary) && full_mean < 0.4,
            "desk min/mean/max " + fmt(d.summary["min_s"].get<double>()) + "/" +
                fmt(d.summary["mean_s"].get<double>()) + "/" + fmt(d.summary["max_s"].get<double>()) +
                " s; L=2000/H=200 min/mean/max " + fmt(p.summary["min_s"].get<double>()) + "/" + fmt(full_mean) +
                "/" + fmt(p.summary["max_s"].get<double>()) + " s"};
}

// ------------------------------------------------------------------ 7: wire codec

std::vector<std::uint8_t> fuzz_case(Rng& rng, test_support::RandomOpcua& random) {
    switch (rng.below(3)) {
        case 0: {  // random bytes behind a plausible header
            std::vector<std::uint8_t> frame(8 + rng.below(256));
            for (auto& b : frame) b = static_cast<std::uint8_t>(rng.next());
            static const char* kTypes[] = {"HEL", "ACK", "ERR", "OPN", "MSG", "CLO"};
            const char* t = kTypes[rng.below(6)];
            std::copy(t, t + 3, frame.begin());
            frame[3] = 'F';
            if (rng.below(2)) {
                const auto n = static_cast<std::uint32_t>(frame.size());
                for (int i = 0; i < 4; ++i) frame[4 + i] = static_cast<std::uint8_t>(n >> (8 * i));
            }
            return frame;
        }
        case 1: {  // mutated valid frame with a consistent size field
            auto frame = opcua::encode_message(random.message());
            const auto flips = 1 + rng.below(8);
            for (std::uint64_t k = 0; k < flips; ++k) {
                const auto pos = 8 + rng.below(frame.size() - 8);
                frame[pos] = rng.below(2) ? static_cast<std::uint8_t>(rng.next())
                                          : static_cast<std::uint8_t>(frame[pos] ^ (1u << rng.below(8)));
            }
            return frame;
        }
        default: {  // truncated or extended frame, size field patched half of the time
            auto frame = opcua::encode_message(random.message());
            if (rng.below(2)) {
                frame.resize(rng.below(frame.size() + 1));
            } else {
                const auto extra = 1 + rng.below(16);
                for (std::uint64_t k = 0; k < extra; ++k) frame.push_back(static_cast<std::uint8_t>(rng.next()));
            }
            if (frame.size() >= 8 && rng.below(2)) {
                const auto n = static_cast<std::uint32_t>(frame.size());
                for (int i = 0; i < 4; ++i) frame[4 + i] = static_cast<std::uint8_t>(n >> (8 * i));
            }
            return frame;
        }
    }
}

std::vector<std::string> conformance() {
    using namespace opcua;
    std::vector<std::string> failed;
    auto check = [&](bool ok, const std::string& what) {
        if (!ok) failed.push_back(what);
    };
    auto error_of = [](const std::function<void()>& f) -> std::uint32_t {
        try {
            f();
        } catch (const ClientError& e) {
            return e.status();
        }
        return status::Good;
    };

    AddressSpace space;
    IntrusionLog log;
    ServerContext ctx(space, log);
    TcpServer server(ctx, "127.0.0.1", 0);
    server.start();

    Client c(std::make_unique<TcpTransport>("127.0.0.1", server.port()));
    const auto ack = c.hello();
    check(ack.protocol_version == 0 && ack.receive_buffer_size >= kMinBufferSize &&
              ack.send_buffer_size >= kMinBufferSize,
          "HEL/ACK");

    const auto opn = c.open_channel();
    check(opn.token.channel_id != 0 && opn.token.token_id != 0 && c.channel_id() == opn.token.channel_id,
          "OPN(None)");
    {
        Client other(std::make_unique<TcpTransport>("127.0.0.1", server.port()));
        other.hello();
        check(error_of([&] { other.open_channel(0, "http://opcfoundation.org/UA/SecurityPolicy#Basic256Sha256"); }) ==
                  status::BadSecurityPolicyRejected,
              "OPN rejects secured policies");
    }
    const auto eps = c.get_endpoints();
    check(eps.endpoints.size() == 1 && eps.endpoints[0].security_mode == 1, "GetEndpoints");

    check(error_of([&] { c.read_value(NodeId(kAppNamespace, AddressSpace::kPitch)); }) != status::Good,
          "Read without a session is refused");
    const auto created = c.create_session("acceptance");
    check(!created.authentication_token.is_null(), "CreateSession");
    c.activate_session();
    check(ctx.session_count() == 1, "ActivateSession");

    const auto objects = c.browse(NodeId(0, ids::ObjectsFolder));
    std::set<std::string> names;
    for (const auto& r : objects.references) names.insert(r.browse_name.name.value_or(""));
    check(names.count("Fan0") && names.count("Fan1") && names.count("Beam") && names.count("Target"), "Browse");

    const auto pitch = c.read_value(NodeId(kAppNamespace, AddressSpace::kPitch));
    check(pitch.value && std::holds_alternative<double>(pitch.value->value) && pitch.source_timestamp.has_value(),
          "Read");

    check(c.write_value(NodeId(kAppNamespace, AddressSpace::kTargetPitch), Variant{0.25}).code == status::Good,
          "Write to Target");
    const auto back = c.read_value(NodeId(kAppNamespace, AddressSpace::kTargetPitch));
    check(back.value && back.value->value == Variant{0.25}.value, "Read after Write");
    check(c.write_value(NodeId(kAppNamespace, AddressSpace::kPitch), Variant{0.25}).code == status::BadNotWritable,
          "Write to a sensor variable");

    c.close_session();
    check(error_of([&] { c.read_value(NodeId(kAppNamespace, AddressSpace::kPitch)); }) == status::BadSessionIdInvalid,
          "CloseSession");
    c.close_channel();
    server.stop();
    return failed;
}

Outcome wire_codec() {
    const auto start = Clock::now();
    Rng rng(77);
    test_support::RandomOpcua random(rng);

    std::size_t rejected = 0, accepted = 0, crashed = 0;
    std::string first_crash;
    for (int n = 0; n < 1'000'000; ++n) {
        const auto frame = fuzz_case(rng, random);
        try {
            opcua::decode_message(frame);
            ++accepted;
        } catch (const opcua::DecodeError&) {
            ++rejected;
        } catch (const std::exception& e) {
            if (crashed++ == 0) first_crash = e.what();
        }
    }

    std::size_t mismatched = 0;
    for (int n = 0; n < 10'000; ++n) {
        const auto m = random.message();
        const auto bytes = opcua::encode_message(m);
        const auto back = opcua::decode_message(bytes);
        if (!(back == m) || opcua::encode_message(back) != bytes) ++mismatched;
    }

    const auto failed = conformance();
    std::string failed_list;
    for (const auto& f : failed) failed_list += (failed_list.empty() ? "" : ", ") + f;

    return {crashed == 0 && mismatched == 0 && failed.empty(),
            "fuzz 1000000 cases (" + std::to_string(rejected) + " rejected, " + std::to_string(accepted) +
                " accepted, " + std::to_string(crashed) + " unexpected failures" +
                (first_crash.empty() ? "" : ": " + first_crash) + "), 10000 round trips with " +
                std::to_string(mismatched) + " mismatches, conformance " +
                (failed.empty() ? "all passed" : "failed: " + failed_list) + ", " + fmt(seconds_since(start)) +
                " s"};
}

// ------------------------------------------------------------------ 8, 9: served decoy

struct Served {
    pid_t pid = -1;
    std::uint16_t port = 0;
    fs::path out, err, log;

    ~Served() {
        if (pid > 0) {
            kill(pid, SIGKILL);
            wait_exit(pid);
        }
    }

    json stop() {
        kill(pid, SIGTERM);
        const int code = wait_exit(pid);
        pid = -1;
        if (code != 0) throw std::runtime_error("serve exited with " + std::to_string(code) + ": " + read_text(err));
        return json::parse(read_text(out));
    }
};

void start_serve(Served& s, const fs::path& manifest, const fs::path& dir) {
    fs::create_directories(dir);
    s.out = dir / "serve.out";
    s.err = dir / "serve.err";
    s.log = dir / "intrusion.log";
    s.pid = spawn({HONEYPOT_CLI_PATH, "serve", "--profile", "desk", "--json", "--manifest", manifest.string(), "--host",
                   "127.0.0.1", "--port", "0", "--log", s.log.string()},
                  s.out, s.err);
    const auto start = Clock::now();
    while (seconds_since(start) < 60.0) {
        const auto text = read_text(s.err);
        const auto pos = text.find("opc.tcp://127.0.0.1:");
        if (pos != std::string::npos) {
            s.port = static_cast<std::uint16_t>(std::stoi(text.substr(pos + 20)));
            return;
        }
        int status = 0;
        if (waitpid(s.pid, &status, WNOHANG) == s.pid) {
            s.pid = -1;
            throw std::runtime_error("serve exited early: " + text);
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(50));
    }
    throw std::runtime_error("serve did not report its port");
}

Outcome access_control(const Served& s) {
    using namespace opcua;
    const std::uint32_t read_only[] = {AddressSpace::kFan0Voltage, AddressSpace::kFan1Voltage, AddressSpace::kYaw,
                                       AddressSpace::kPitch,       AddressSpace::kYawDot,      AddressSpace::kPitchDot};
    const Variant values[] = {Variant{1.5},
                              Variant{-1e9},
                              Variant{1.5f},
                              Variant{std::int32_t{7}},
                              Variant{true},
                              Variant{String{"0"}},
                              Variant{}};

    Client c(std::make_unique<TcpTransport>("127.0.0.1", s.port));
    c.connect_session();
    std::map<std::string, std::size_t> attempts;
    std::size_t total = 0, refused = 0;
    for (const auto id : read_only) {
        for (const auto& v : values) {
            const NodeId node(kAppNamespace, id);
            if (c.write_value(node, v).code == status::BadNotWritable) ++refused;
            ++attempts[node.to_string()];
            ++total;
        }
    }
    c.close_session();
    c.close_channel();

    std::map<std::string, std::size_t> logged;
    std::size_t logged_total = 0;
    std::istringstream in(read_text(s.log));
    std::string line;
    while (std::getline(in, line)) {
        const auto j = json::parse(line);
        if (j.at("op") == "Write" && j.at("status") == "BadNotWritable") {
            ++logged[j.at("node").get<std::string>()];
            ++logged_total;
        }
    }
    return {refused == total && logged == attempts,
            std::to_string(refused) + "/" + std::to_string(total) + " writes over " +
                std::to_string(std::size(read_only)) + " variables refused with BadNotWritable, " +
                std::to_string(logged_total) + " logged"};
}

Outcome decoy_smoke(Served& s, const fs::path& manifest_path) {
    using namespace opcua;
    const auto manifest = gen::read_manifest(manifest_path);
    const auto range = manifest.scaler.ranges[static_cast<std::size_t>(ts::Var::Pitch)];
    const NodeId pitch(kAppNamespace, AddressSpace::kPitch);

    Client c(std::make_unique<TcpTransport>("127.0.0.1", s.port));
    c.connect_session();

    std::set<std::int64_t> stamps;
    std::size_t polls = 0, outside = 0;
    const auto start = Clock::now();
    for (int k = 0; k < 1000; ++k) {
        std::this_thread::sleep_until(start + std::chrono::milliseconds(10 * k));
        const auto dv = c.read_value(pitch);
        ++polls;
        const double v = std::get<double>(dv.value.value().value);
        if (!(v >= range.min && v <= range.max)) ++outside;
        stamps.insert(dv.source_timestamp.value().ticks);
    }
    const double polled_for = seconds_since(start);

    // back-to-back reads see every update; spacing of distinct source timestamps
    std::set<std::int64_t> burst;
    const auto burst_start = Clock::now();
    while (seconds_since(burst_start) < 2.0) burst.insert(c.read_value(pitch).source_timestamp.value().ticks);
    c.close_session();
    c.close_channel();
    std::vector<double> gaps;
    for (auto it = std::next(burst.begin()); it != burst.end(); ++it) {
        gaps.push_back(static_cast<double>(*it - *std::prev(it)) * 1e-7);
    }
    std::sort(gaps.begin(), gaps.end());
    const double client_median = gaps.empty() ? 0.0 : gaps[gaps.size() / 2];

    const auto summary = s.stop();
    const double server_median = summary.at("median_interval_s").get<double>();
    auto near_2ms = [](double v) { return std::abs(v - 0.002) <= 0.0005; };
    return {stamps.size() >= 990 && outside == 0 && near_2ms(client_median) && near_2ms(server_median),
            std::to_string(polls) + " polls in " + fmt(polled_for) + " s saw " + std::to_string(stamps.size()) +
                " distinct timestamps, " + std::to_string(outside) + " values outside the training range, median " +
                "spacing " + fmt(client_median * 1e3) + " ms observed (" + fmt(server_median * 1e3) +
                " ms at the publisher, " + std::to_string(summary.at("underruns").get<std::uint64_t>()) +
                " underruns)"};
}

// ------------------------------------------------------------------ 10: determinism

Outcome determinism(const Pipeline& a, const Pipeline& b) {
    std::vector<fs::path> files{"sim.csv", "generated.csv", "rmse.csv"};
    for (const auto& e : fs::directory_iterator(a.dir / "model")) files.push_back(fs::path("model") / e.path().filename());
    std::sort(files.begin(), files.end());
    std::vector<std::string> differing;
    for (const auto& f : files) {
        if (!fs::exists(b.dir / f) || read_text(a.dir / f) != read_text(b.dir / f)) differing.push_back(f.string());
    }
    // summaries carry output paths, which differ between the runs by construction
    auto strip = [](json j) {
        j.erase("out");
        j.erase("manifest");
        return j;
    };
    const std::pair<const CliResult*, const CliResult*> summaries[] = {
        {&a.train, &b.train}, {&a.generate, &b.generate}, {&a.evaluate, &b.evaluate}};
    const char* names[] = {"train summary", "generate summary", "evaluate summary"};
    for (std::size_t k = 0; k < std::size(summaries); ++k) {
        if (strip(summaries[k].first->summary) != strip(summaries[k].second->summary)) differing.emplace_back(names[k]);
    }
    std::string list;
    for (const auto& d : differing) list += " " + d;
    return {differing.empty(), std::to_string(files.size()) + " files and 3 summaries compared, " +
                                   std::to_string(differing.size()) + " differ" + list};
}

}  // namespace

int main(int argc, char** argv) {
    const fs::path work = argc > 1 ? fs::path(argv[1]) : fs::temp_directory_path() / "honeypot_acceptance";
    fs::remove_all(work);
    fs::create_directories(work);
    const auto start = Clock::now();

    report(1, guarded(gradient_check));
    report(2, guarded(adam_oracle));

    std::optional<Pipeline> a;
    Outcome pipeline_error;
    try {
        a = run_pipeline(work / "run_a");
    } catch (const std::exception& e) {
        pipeline_error = {false, std::string("pipeline failed: ") + e.what()};
    }
    report(3, a ? guarded([&] { return training_converges(*a); }) : pipeline_error);
    report(4, a ? guarded([&] { return generation_bounded(*a); }) : pipeline_error);
    report(5, a ? guarded([&] { return rmse_protocol(*a); }) : pipeline_error);
    report(6, a ? guarded([&] { return producer_timing(*a, work); }) : pipeline_error);
    report(7, guarded(wire_codec));

    if (a) {
        Served served;
        Outcome started{true, ""};
        try {
            start_serve(served, a->manifest, work / "serve");
        } catch (const std::exception& e) {
            started = {false, std::string("serve failed: ") + e.what()};
        }
        report(8, started.pass ? guarded([&] { return access_control(served); }) : started);
        report(9, started.pass ? guarded([&] { return decoy_smoke(served, a->manifest); }) : started);
    } else {
        report(8, pipeline_error);
        report(9, pipeline_error);
    }

    report(10, a ? guarded([&] {
        const auto b = run_pipeline(work / "run_b");
        return determinism(*a, b);
    })
                 : pipeline_error);

    std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << " in "
              << fmt(seconds_since(start), 4) << " s" << std::endl;
    return failures == 0 ? 0 : 1;
}
