// worldsmith command line: service, mock backend, log analysis and replay.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <pthread.h>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "worldsmith/analytics.hpp"
#include "worldsmith/engine.hpp"
#include "worldsmith/error.hpp"
#include "worldsmith/http_backend.hpp"
#include "worldsmith/http_service.hpp"
#include "worldsmith/mock_backend.hpp"
#include "worldsmith/replay.hpp"

namespace fs = std::filesystem;
using namespace worldsmith;

namespace {

struct Endpoint {
    std::string host;
    int port = 0;
};

Endpoint parse_listen(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos) throw CLI::ValidationError("--listen", "expected <addr:port>");
    Endpoint e{text.substr(0, colon), 0};
    try {
        e.port = std::stoi(text.substr(colon + 1));
    } catch (const std::exception&) {
        throw CLI::ValidationError("--listen", "bad port in '" + text + "'");
    }
    if (e.host.empty()) e.host = "0.0.0.0";
    return e;
}

Size parse_resolution(const std::string& text) {
    const auto x = text.find('x');
    try {
        if (x == std::string::npos) {
            const int v = std::stoi(text);
            return {v, v};
        }
        return {std::stoi(text.substr(0, x)), std::stoi(text.substr(x + 1))};
    } catch (const std::exception&) {
        throw CLI::ValidationError("--resolution", "expected <n> or <w>x<h>");
    }
}

// Blocks SIGINT/SIGTERM in every thread started afterwards and waits for one.
class SignalWaiter {
public:
    SignalWaiter() {
        sigemptyset(&set_);
        sigaddset(&set_, SIGINT);
        sigaddset(&set_, SIGTERM);
        pthread_sigmask(SIG_BLOCK, &set_, nullptr);
    }
    int wait() {
        int sig = 0;
        sigwait(&set_, &sig);
        return sig;
    }

private:
    sigset_t set_;
};

std::vector<InteractionEvent> load_events(const std::vector<std::string>& paths) {
    std::vector<fs::path> files;
    for (const auto& p : paths) {
        if (fs::is_directory(p)) {
            for (const auto& entry : fs::recursive_directory_iterator(p)) {
                if (entry.path().filename() == "events.ndjson") files.push_back(entry.path());
            }
        } else {
            files.emplace_back(p);
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<InteractionEvent> events;
    for (const auto& f : files) {
        std::ifstream in(f);
        if (!in) throw std::runtime_error("cannot read " + f.string());
        std::stringstream ss;
        ss << in.rdbuf();
        auto parsed = parse_ndjson(ss.str());
        events.insert(events.end(), parsed.begin(), parsed.end());
    }
    return events;
}

std::vector<EventKind> parse_kinds(const std::vector<std::string>& names) {
    if (names.empty()) return {std::begin(all_event_kinds), std::end(all_event_kinds)};
    std::vector<EventKind> kinds;
    for (const auto& n : names) {
        auto k = event_kind_from_string(n);
        if (!k) throw CLI::ValidationError("--kinds", "unknown event kind '" + n + "'");
        kinds.push_back(*k);
    }
    return kinds;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

spdlog::level::level_enum parse_level(const std::string& name) {
    const auto level = spdlog::level::from_str(name);
    if (level == spdlog::level::off && name != "off") {
        throw CLI::ValidationError("--log-level", "unknown level '" + name + "'");
    }
    return level;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"worldsmith: tiled world-generation engine and service"};
    app.require_subcommand(1);

    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace|debug|info|warn|error|off")
        ->envname("WORLDSMITH_LOG_LEVEL");

    // serve
    auto* serve = app.add_subcommand("serve", "Run the HTTP service");
    std::string listen = "127.0.0.1:8080";
    std::string data_dir = "worldsmith-data";
    std::string backend_url;
    std::string backend_name;
    int batch_count = default_batch_count;
    std::string resolution = "512";
    std::string blur_sigma = "auto";
    bool no_fsync = false;
    serve->add_option("--listen", listen, "<addr:port>")->envname("WORLDSMITH_LISTEN");
    serve->add_option("--data-dir", data_dir, "Session storage root")->envname("WORLDSMITH_DATA_DIR");
    auto* url_opt =
        serve->add_option("--backend-url", backend_url, "Remote /v1 backend")->envname("WORLDSMITH_BACKEND_URL");
    serve->add_option("--backend", backend_name, "In-process backend")
        ->check(CLI::IsMember({"mock"}))
        ->envname("WORLDSMITH_BACKEND")
        ->excludes(url_opt);
    serve->add_option("--batch-count", batch_count, "Images per generation")
        ->check(CLI::Range(1, max_batch_count))
        ->envname("WORLDSMITH_BATCH_COUNT");
    serve->add_option("--resolution", resolution, "<n> or <w>x<h>")->envname("WORLDSMITH_RESOLUTION");
    serve->add_option("--blur-sigma", blur_sigma, "auto or pixels")->envname("WORLDSMITH_BLUR_SIGMA");
    serve->add_flag("--no-fsync", no_fsync, "Skip fsync on writes")->envname("WORLDSMITH_NO_FSYNC");

    // mock-backend
    auto* mock = app.add_subcommand("mock-backend", "Serve the deterministic mock over the /v1 protocol");
    std::string mock_listen = "127.0.0.1:7860";
    int mock_workers = 1;
    int mock_latency_ms = 0;
    mock->add_option("--listen", mock_listen, "<addr:port>")->envname("WORLDSMITH_MOCK_LISTEN");
    mock->add_option("--workers", mock_workers)->check(CLI::Range(1, 64));
    mock->add_option("--latency-ms", mock_latency_ms)->check(CLI::NonNegativeNumber);

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Analyze interaction logs (CSV on stdout)");
    analyze->require_subcommand(1);
    std::vector<std::string> inputs;
    std::vector<std::string> kind_names;
    bool no_collapse = false;
    bool counts = false;
    std::string lexicon_path;
    std::vector<std::string> texts;

    auto* transitions = analyze->add_subcommand("transitions", "Row-normalized action transition matrix");
    transitions->add_option("inputs", inputs, "NDJSON files or data directories")->required();
    transitions->add_option("--kinds", kind_names, "Event kinds to keep")->delimiter(',');
    transitions->add_flag("--no-collapse", no_collapse, "Count repeated same-kind events");
    transitions->add_flag("--counts", counts, "Print raw counts instead of ratios");

    auto* trace = analyze->add_subcommand("trace", "Activity runs per session");
    trace->add_option("inputs", inputs, "NDJSON files or data directories")->required();
    trace->add_option("--kinds", kind_names, "Event kinds to keep")->delimiter(',');

    auto* codes = analyze->add_subcommand("codes", "Prompt keyword coding");
    codes->add_option("inputs", inputs, "NDJSON files or data directories");
    codes->add_option("--text", texts, "Code these texts instead of a log");
    codes->add_option("--lexicon", lexicon_path, "JSON keyword lists merged into the built-in lexicon")
        ->check(CLI::ExistingFile);

    auto* stats = analyze->add_subcommand("stats", "Prompt length statistics");
    stats->add_option("inputs", inputs, "NDJSON files or data directories")->required();

    // replay
    auto* replay = app.add_subcommand("replay", "Replay a telemetry log against a running service");
    std::string replay_events_path;
    std::string server_url = "http://127.0.0.1:8080";
    replay->add_option("events", replay_events_path, "NDJSON telemetry file")->required()->check(CLI::ExistingFile);
    replay->add_option("--server", server_url, "Service base URL");

    CLI11_PARSE(app, argc, argv);

    try {
        spdlog::set_level(parse_level(log_level));

        if (*serve) {
            const auto where = parse_listen(listen);
            EngineOptions options;
            options.data_dir = data_dir;
            options.batch_count = batch_count;
            options.generation_resolution = parse_resolution(resolution);
            options.fsync = !no_fsync;
            if (blur_sigma != "auto") {
                try {
                    options.blur_sigma = std::stod(blur_sigma);
                } catch (const std::exception&) {
                    throw CLI::ValidationError("--blur-sigma", "expected auto or a number");
                }
                if (*options.blur_sigma < 0) throw CLI::ValidationError("--blur-sigma", "must be non-negative");
            }
            SignalWaiter signals;
            std::shared_ptr<Backend> backend;
            if (!backend_url.empty()) {
                backend = std::make_shared<HttpBackend>(backend_url);
                spdlog::info("backend: {}", backend_url);
            } else {
                if (backend_name.empty()) spdlog::warn("no backend given, using the mock");
                backend = std::make_shared<MockBackend>();
                spdlog::info("backend: in-process mock");
            }
            Engine engine(backend, options);
            HttpService service(engine);
            const int port = service.start(where.host, where.port);
            spdlog::info("serving on {}:{} (data dir {}, batch {}, resolution {}x{}, blur sigma {})", where.host, port,
                         data_dir, batch_count, options.generation_resolution.width,
                         options.generation_resolution.height, blur_sigma);
            const int sig = signals.wait();
            spdlog::info("signal {}, shutting down", sig);
            service.stop();
            return 0;
        }

        if (*mock) {
            const auto where = parse_listen(mock_listen);
            SignalWaiter signals;
            MockBackend::Options o;
            o.workers = mock_workers;
            o.latency = std::chrono::milliseconds(mock_latency_ms);
            MockBackend backend(o);
            BackendServer server(backend);
            const int port = server.start(where.host, where.port);
            spdlog::info("mock backend on {}:{}", where.host, port);
            signals.wait();
            server.stop();
            return 0;
        }

        if (*analyze) {
            if (*transitions) {
                const auto events = load_events(inputs);
                const auto kinds = parse_kinds(kind_names);
                const auto m = transition_matrix(events, kinds, !no_collapse);
                if (!counts) {
                    std::cout << m.to_csv();
                } else {
                    std::cout << "from\\to";
                    for (auto k : m.kinds) std::cout << ',' << to_string(k);
                    std::cout << '\n';
                    for (std::size_t i = 0; i < m.kinds.size(); ++i) {
                        std::cout << to_string(m.kinds[i]);
                        for (auto c : m.counts[i]) std::cout << ',' << c;
                        std::cout << '\n';
                    }
                }
            } else if (*trace) {
                const auto events = load_events(inputs);
                std::cout << "session_id,kind,start_ms,end_ms,events\n";
                for (const auto& r : activity_runs(events, parse_kinds(kind_names))) {
                    std::cout << r.session_id << ',' << to_string(r.kind) << ',' << r.start_ms << ',' << r.end_ms
                              << ',' << r.events << '\n';
                }
            } else if (*codes) {
                CodingLexicon lexicon = CodingLexicon::builtin();
                if (!lexicon_path.empty()) {
                    std::ifstream in(lexicon_path);
                    lexicon.merge(CodingLexicon::from_json(nlohmann::json::parse(in)));
                }
                std::vector<PromptText> prompts;
                for (const auto& t : texts) prompts.push_back({PromptText::Source::scene, "", std::nullopt, t});
                if (!inputs.empty()) {
                    auto logged = collect_prompts(load_events(inputs));
                    prompts.insert(prompts.end(), logged.begin(), logged.end());
                }
                std::cout << "source,session_id,tile_id,text";
                for (auto c : all_prompt_codes) std::cout << ',' << to_string(c);
                std::cout << '\n';
                for (const auto& p : prompts) {
                    const auto found = code_prompt(p.text, lexicon);
                    std::cout << (p.source == PromptText::Source::scene ? "scene" : "region") << ','
                              << p.session_id << ',' << p.tile_id.value_or("") << ',' << csv_field(p.text);
                    for (auto c : all_prompt_codes) std::cout << ',' << (found.count(c) ? 1 : 0);
                    std::cout << '\n';
                }
            } else if (*stats) {
                const auto s = prompt_stats(load_events(inputs));
                std::cout << "metric,count,mean,median,iqr\n";
                auto row = [](const char* name, const Summary& v) {
                    std::cout << name << ',' << v.count << ',' << v.mean << ',' << v.median << ',' << v.iqr << '\n';
                };
                row("scene_words", s.scene);
                row("region_words", s.region);
                row("regions_per_tile", s.regions_per_tile);
            }
            return 0;
        }

        if (*replay) {
            const auto events = load_events({replay_events_path});
            const auto report = replay_events(events, server_url);
            nlohmann::json out{{"sessions", report.sessions},
                               {"events_applied", report.events_applied},
                               {"jobs", report.jobs},
                               {"failed_jobs", report.failed_jobs}};
            std::cout << out.dump(2) << '\n';
            return report.failed_jobs == 0 ? 0 : 3;
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const Error& e) {
        spdlog::error("{}: {}", to_string(e.code()), e.what());
        return 2;
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return 2;
    }
    return 0;
}
