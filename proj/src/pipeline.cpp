#include "spatiocorr/pipeline.hpp"

#include "spatiocorr/clustering.hpp"
#include "spatiocorr/corrlab.hpp"
#include "spatiocorr/random.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;

namespace spatiocorr {

StageError::StageError(std::string stage, std::string window, const std::string& message)
    : Error("[" + stage + (window.empty() ? "" : " " + window) + "] " + message), stage_(std::move(stage)),
      window_(std::move(window)) {}

namespace {

template <class F>
auto in_stage(const std::string& stage, const std::string& window, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, window, e.what());
    }
}

const char* criterion_name(NullCriterion c) { return c == NullCriterion::Pooled ? "pooled" : "largest"; }
const char* estimator_name(Estimator e) { return e == Estimator::Ols ? "ols" : "robust"; }

void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument("config: " + what);
}

std::string utc_stamp(std::time_t t, const char* format) {
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, format, &tm);
    return buf;
}

class ArtifactWriter {
public:
    explicit ArtifactWriter(fs::path root) : root_(std::move(root)) {}

    const fs::path& root() const noexcept { return root_; }

    std::ofstream open(const std::string& rel) {
        const fs::path path = root_ / rel;
        fs::create_directories(path.parent_path());
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error("cannot write " + path.string());
        files_.push_back(rel);
        return out;
    }

    void json(const std::string& rel, const Json& j) { open(rel) << j.dump(2) << '\n'; }

    std::vector<std::string> files() const {
        auto f = files_;
        std::sort(f.begin(), f.end());
        return f;
    }

private:
    fs::path root_;
    std::vector<std::string> files_;
};

fs::path make_run_dir(const RunConfig& config, std::time_t now) {
    fs::path base(config.output_dir);
    if (!config.timestamped) {
        fs::create_directories(base);
        return base;
    }
    const std::string stem = "run-" + utc_stamp(now, "%Y%m%dT%H%M%S");
    fs::path dir = base / stem;
    for (int k = 2; fs::exists(dir); ++k) dir = base / (stem + "-" + std::to_string(k));
    fs::create_directories(dir);
    return dir;
}

std::vector<std::vector<std::size_t>> read_cluster_map(const std::string& path,
                                                       const std::vector<std::string>& entities) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open cluster map " + path);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < entities.size(); ++i) index[entities[i]] = i;
    std::map<std::string, std::vector<std::size_t>> groups;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ParseError(row, "expected entity,cluster");
        const std::string entity = line.substr(0, comma);
        const std::string cluster = line.substr(comma + 1);
        if (row == 1 && entity == "entity") continue;
        const auto it = index.find(entity);
        if (it == index.end()) throw ParseError(row, "unknown entity '" + entity + "'");
        groups[cluster].push_back(it->second);
    }
    std::vector<std::vector<std::size_t>> out;
    for (auto& [name, members] : groups) out.push_back(std::move(members));
    if (out.empty()) throw Error("cluster map " + path + " is empty");
    return out;
}

struct WindowAnalysis {
    CorrelationMatrix c;
    PartialCorrelationMatrix p;
    NullSpectrum null;
};

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

Json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("incomplete run: missing " + path.string());
    return Json::parse(in);
}

} // namespace

std::string stage_list(unsigned stages) {
    std::string out;
    auto add = [&](unsigned bit, const char* name) {
        if (!(stages & bit)) return;
        if (!out.empty()) out += ',';
        out += name;
    };
    add(kStageIngest, "ingest");
    add(kStageAnalyze, "analyze");
    add(kStageRegimes, "regimes");
    add(kStageCluster, "cluster");
    return out;
}

void RunConfig::validate() const {
    require(!input.empty(), "input path is required");
    require(seed.has_value(), "seed is mandatory");
    require(window_size >= 3, "window_size must be >= 3");
    require(null_rounds >= 1, "null_rounds must be >= 1");
    require(schedule.cooling > 0.0 && schedule.cooling < 1.0, "schedule.cooling must lie in (0, 1)");
    require(schedule.moves_per_entity > 0.0, "schedule.moves_per_entity must be > 0");
    require(schedule.stall_temperatures >= 1, "schedule.stall_temperatures must be >= 1");
    require(schedule.max_temperatures >= 1, "schedule.max_temperatures must be >= 1");
    require(schedule.probe_moves >= 1, "schedule.probe_moves must be >= 1");
    require(restarts >= 1, "restarts must be >= 1");
    require(max_consensus_iterations >= 1, "max_consensus_iterations must be >= 1");
    require(regime_threshold > 0.0 && regime_threshold <= 2.0, "regime_threshold must lie in (0, 2]");
    require(v_threshold >= 0.0 && v_threshold <= 1.0, "v_threshold must lie in [0, 1]");
    require(!min_gain || (*min_gain >= -1.0 && *min_gain <= 1.0), "min_gain must lie in [-1, 1]");
    require(affinity_min_gain >= 0.0 && affinity_min_gain <= 1.0, "affinity_min_gain must lie in [0, 1]");
    require(alpha > 0.0 && alpha < 1.0, "alpha must lie in (0, 1)");
    require(absorption_resamples >= 1, "absorption_resamples must be >= 1");
    require(tracking.horizon >= 1, "tracking.horizon must be >= 1");
    require(!(tracking.reference_end < tracking.reference_start), "tracking reference range is reversed");
    require(leading_vectors >= 1, "leading_vectors must be >= 1");
}

Json RunConfig::to_json() const {
    Json j;
    j["input"] = input;
    j["national"] = national ? Json(*national) : Json(nullptr);
    j["schema"] = schema ? Json(*schema) : Json(nullptr);
    j["cluster_map"] = cluster_map ? Json(*cluster_map) : Json(nullptr);
    j["window_size"] = window_size;
    j["null_rounds"] = null_rounds;
    j["null_criterion"] = criterion_name(null_criterion);
    j["schedule"] = Json{{"initial_temperature", schedule.initial_temperature},
                         {"cooling", schedule.cooling},
                         {"moves_per_entity", schedule.moves_per_entity},
                         {"stall_temperatures", schedule.stall_temperatures},
                         {"max_temperatures", schedule.max_temperatures},
                         {"probe_moves", schedule.probe_moves}};
    j["restarts"] = restarts;
    j["max_consensus_iterations"] = max_consensus_iterations;
    j["regime_threshold"] = regime_threshold;
    j["regime_estimator"] = estimator_name(regime_estimator);
    j["v_threshold"] = v_threshold;
    j["min_gain"] = min_gain ? Json(*min_gain) : Json(nullptr);
    j["affinity_min_gain"] = affinity_min_gain;
    j["alpha"] = alpha;
    j["absorption_resamples"] = absorption_resamples;
    j["tracking"] = Json{{"interval_split", tracking.interval_split ? Json(tracking.interval_split->to_string()) : Json(nullptr)},
                         {"reference_start", tracking.reference_start.to_string()},
                         {"reference_end", tracking.reference_end.to_string()},
                         {"horizon", tracking.horizon},
                         {"exhaustive_limit", tracking.exhaustive_limit}};
    j["seed"] = seed ? Json(*seed) : Json(nullptr);
    j["output_dir"] = output_dir;
    j["timestamped"] = timestamped;
    j["threads"] = threads;
    j["write_matrices"] = write_matrices;
    j["dump_null"] = dump_null;
    j["leading_vectors"] = leading_vectors;
    return j;
}

void RunConfig::merge_json(const Json& j) {
    if (!j.is_object()) throw InvalidArgument("config: top level must be an object");
    auto opt_string = [](const Json& v) -> std::optional<std::string> {
        if (v.is_null()) return std::nullopt;
        return v.get<std::string>();
    };
    for (const auto& [key, v] : j.items()) {
        try {
            if (key == "input") input = v.get<std::string>();
            else if (key == "national") national = opt_string(v);
            else if (key == "schema") schema = opt_string(v);
            else if (key == "cluster_map") cluster_map = opt_string(v);
            else if (key == "window_size") window_size = v.get<std::size_t>();
            else if (key == "null_rounds") null_rounds = v.get<std::size_t>();
            else if (key == "null_criterion") {
                const auto s = v.get<std::string>();
                if (s == "pooled") null_criterion = NullCriterion::Pooled;
                else if (s == "largest") null_criterion = NullCriterion::LargestEigen;
                else throw InvalidArgument("config: null_criterion must be 'pooled' or 'largest'");
            } else if (key == "schedule") {
                for (const auto& [sk, sv] : v.items()) {
                    if (sk == "initial_temperature") schedule.initial_temperature = sv.get<double>();
                    else if (sk == "cooling") schedule.cooling = sv.get<double>();
                    else if (sk == "moves_per_entity") schedule.moves_per_entity = sv.get<double>();
                    else if (sk == "stall_temperatures") schedule.stall_temperatures = sv.get<int>();
                    else if (sk == "max_temperatures") schedule.max_temperatures = sv.get<int>();
                    else if (sk == "probe_moves") schedule.probe_moves = sv.get<int>();
                    else throw InvalidArgument("config: unknown key schedule." + sk);
                }
            } else if (key == "restarts") restarts = v.get<std::size_t>();
            else if (key == "max_consensus_iterations") max_consensus_iterations = v.get<int>();
            else if (key == "regime_threshold") regime_threshold = v.get<double>();
            else if (key == "regime_estimator") {
                const auto s = v.get<std::string>();
                if (s == "ols") regime_estimator = Estimator::Ols;
                else if (s == "robust") regime_estimator = Estimator::Robust;
                else throw InvalidArgument("config: regime_estimator must be 'ols' or 'robust'");
            } else if (key == "v_threshold") v_threshold = v.get<double>();
            else if (key == "min_gain") min_gain = v.is_null() ? std::nullopt : std::optional<double>(v.get<double>());
            else if (key == "affinity_min_gain") affinity_min_gain = v.get<double>();
            else if (key == "alpha") alpha = v.get<double>();
            else if (key == "absorption_resamples") absorption_resamples = v.get<std::size_t>();
            else if (key == "tracking") {
                for (const auto& [tk, tv] : v.items()) {
                    if (tk == "interval_split")
                        tracking.interval_split =
                            tv.is_null() ? std::nullopt : std::optional<Quarter>(Quarter::parse(tv.get<std::string>()));
                    else if (tk == "reference_start") tracking.reference_start = Quarter::parse(tv.get<std::string>());
                    else if (tk == "reference_end") tracking.reference_end = Quarter::parse(tv.get<std::string>());
                    else if (tk == "horizon") tracking.horizon = tv.get<std::size_t>();
                    else if (tk == "exhaustive_limit") tracking.exhaustive_limit = tv.get<std::size_t>();
                    else throw InvalidArgument("config: unknown key tracking." + tk);
                }
            } else if (key == "seed") seed = v.is_null() ? std::nullopt : std::optional<std::uint64_t>(v.get<std::uint64_t>());
            else if (key == "output_dir") output_dir = v.get<std::string>();
            else if (key == "timestamped") timestamped = v.get<bool>();
            else if (key == "threads") threads = v.get<std::size_t>();
            else if (key == "write_matrices") write_matrices = v.get<bool>();
            else if (key == "dump_null") dump_null = v.get<bool>();
            else if (key == "leading_vectors") leading_vectors = v.get<std::size_t>();
            else throw InvalidArgument("config: unknown key " + key);
        } catch (const Json::exception& e) {
            throw InvalidArgument("config: bad value for " + key + ": " + e.what());
        }
    }
}

RunConfig RunConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path);
    RunConfig c;
    try {
        c.merge_json(Json::parse(in, nullptr, true, true));
    } catch (const Json::parse_error& e) {
        throw InvalidArgument("config " + path + ": " + e.what());
    }
    return c;
}

RunManifest run_pipeline(const RunConfig& config, unsigned stages) {
    config.validate();
    if ((stages & kStageAll) == 0) throw InvalidArgument("no stages selected");
    const auto wall_start = std::chrono::steady_clock::now();
    const std::time_t now = std::time(nullptr);
    const std::uint64_t seed = *config.seed;
    const std::size_t threads = resolve_threads(config.threads);

    const fs::path dir = in_stage("output", "", [&] { return make_run_dir(config, now); });
    ArtifactWriter out(dir);

    const CsvSchema schema = config.schema ? in_stage("ingest", "", [&] { return CsvSchema::from_config_file(*config.schema); })
                                           : CsvSchema{};
    const PricePanel prices = in_stage("ingest", "", [&] { return read_price_csv(config.input, schema); });
    const ReturnPanel returns = in_stage("ingest", "", [&] { return log_returns(prices); });
    const Series market = in_stage("ingest", "", [&] {
        std::optional<Series> national;
        if (config.national) {
            std::ifstream in(*config.national);
            if (!in) throw Error("cannot open national series " + *config.national);
            CsvSchema ns;
            ns.delimiter = schema.delimiter;
            national = log_returns(parse_level_series(in, ns, "national"));
        }
        return national_return_series(returns, national);
    });
    const auto wins = in_stage("ingest", "", [&] { return windows(returns, config.window_size); });
    const std::size_t W = wins.size();
    const auto& entities = returns.entities;

    if (stages & kStageIngest) {
        in_stage("ingest", "", [&] {
            auto f = out.open("panel.csv");
            write_price_csv(f, prices);
            auto m = out.open("market_returns.csv");
            m << "quarter," << market.name << '\n';
            for (std::size_t t = 0; t < market.quarters.size(); ++t)
                m << market.quarters[t].to_string() << ',' << format_number(market.values(static_cast<Eigen::Index>(t)))
                  << '\n';
        });
    }

    const bool need_matrices = stages & (kStageAnalyze | kStageCluster);
    const bool need_spectra = stages & (kStageAnalyze | kStageRegimes | kStageCluster);

    std::vector<WindowAnalysis> per(W);
    if (need_matrices) {
        parallel_for(W, threads, [&](std::size_t w) {
            const std::string wn = wins[w].end.to_string();
            per[w].c = in_stage("corrlab", wn, [&] { return pearson_matrix(returns, wins[w]); });
            per[w].p = in_stage("corrlab", wn, [&] { return partial_correlation_matrix(returns, wins[w], market); });
        });
    }

    std::vector<SpectralDecomposition> decomps;
    if (need_spectra)
        decomps = in_stage("spectra", "", [&] { return rolling_decompositions(returns, wins, threads); });

    if (stages & kStageAnalyze) {
        parallel_for(W, threads, [&](std::size_t w) {
            const std::string wn = wins[w].end.to_string();
            per[w].null = in_stage("spectra", wn, [&] {
                NullOptions no;
                no.rounds = config.null_rounds;
                no.seed = derive_seed(seed, {hash_tag("null"), static_cast<std::uint64_t>(wins[w].end.ordinal())});
                no.criterion = config.null_criterion;
                no.significance = config.alpha;
                no.threads = 1;
                return null_spectrum(returns, wins[w], no);
            });
        });
        const MPBounds bounds = mp_bounds(static_cast<double>(config.window_size) / static_cast<double>(entities.size()));
        const double critical = corr_critical_value(config.window_size, config.alpha);
        for (std::size_t w = 0; w < W; ++w) {
            const std::string wn = wins[w].end.to_string();
            in_stage("spectra", wn, [&] {
                const auto dev = deviating_eigenvalues(decomps[w], bounds, per[w].null);
                Json j = spectrum_json(decomps[w], bounds, per[w].null, dev, config.leading_vectors);
                const auto mc = mean_correlation(per[w].c);
                j["mean_correlation"] = Json{{"mean", mc.mean}, {"stddev", mc.stddev}, {"critical_value", critical}};
                out.json("windows/" + wn + "/spectrum.json", j);
                if (config.write_matrices) {
                    auto c = out.open("windows/" + wn + "/correlation.csv");
                    write_matrix_csv(c, entities, per[w].c.values);
                    auto p = out.open("windows/" + wn + "/partial_correlation.csv");
                    write_matrix_csv(p, entities, per[w].p.values);
                }
                if (config.dump_null) {
                    auto n = out.open("windows/" + wn + "/null_eigenvalues.csv");
                    write_null_csv(n, per[w].null, entities.size());
                }
            });
        }
        if (config.cluster_map) {
            in_stage("spectra", "", [&] {
                const auto clusters = read_cluster_map(*config.cluster_map, entities);
                const auto csa = cluster_sampled_absorption(returns, clusters, config.window_size,
                                                            config.absorption_resamples,
                                                            derive_seed(seed, {hash_tag("cluster-absorption")}));
                auto f = out.open("cluster_absorption.csv");
                f << "window";
                for (Eigen::Index n = 0; n < csa.mean_eigenvalues.cols(); ++n) f << ",lambda" << n + 1;
                for (Eigen::Index n = 0; n < csa.absorption.cols(); ++n) f << ",E" << n + 1;
                f << '\n';
                for (std::size_t w = 0; w < csa.window_ends.size(); ++w) {
                    const auto ww = static_cast<Eigen::Index>(w);
                    f << csa.window_ends[w].to_string();
                    for (Eigen::Index n = 0; n < csa.mean_eigenvalues.cols(); ++n)
                        f << ',' << format_number(csa.mean_eigenvalues(ww, n));
                    for (Eigen::Index n = 0; n < csa.absorption.cols(); ++n) f << ',' << format_number(csa.absorption(ww, n));
                    f << '\n';
                }
            });
        }
    }

    if (stages & kStageRegimes) {
        in_stage("market_effect", "", [&] {
            const auto series = market_effect_series(returns, market, decomps, threads);
            auto f = out.open("market_effect.csv");
            write_market_effect_csv(f, series);
            RegimeOptions ro;
            ro.threshold = config.regime_threshold;
            ro.estimator = Estimator::Ols;
            const auto ols = detect_regime_shifts(series, ro);
            ro.estimator = Estimator::Robust;
            const auto robust = detect_regime_shifts(series, ro);
            out.json("regimes.json", Json{{"selected", estimator_name(config.regime_estimator)},
                                          {"market", market.name},
                                          {"ols", to_json(ols)},
                                          {"robust", to_json(robust)}});
        });
    }

    if (stages & kStageCluster) {
        const double min_gain = config.min_gain ? *config.min_gain : corr_critical_value(config.window_size, config.alpha, 1);
        std::vector<ConsensusResult> results(W);
        parallel_for(W, threads, [&](std::size_t w) {
            const std::string wn = wins[w].end.to_string();
            results[w] = in_stage("clustering", wn, [&] {
                ConsensusOptions co;
                co.restarts = config.restarts;
                co.seed = derive_seed(seed, {hash_tag("consensus"), static_cast<std::uint64_t>(wins[w].end.ordinal())});
                co.schedule = config.schedule;
                co.min_gain = min_gain;
                co.affinity_min_gain = config.affinity_min_gain;
                co.max_iterations = config.max_consensus_iterations;
                co.threads = 1;
                auto r = consensus_partition(per[w].p.values, entities, co);
                r.partition.window = wins[w].end;
                return r;
            });
        });

        std::vector<Partition> partitions;
        for (std::size_t w = 0; w < W; ++w) {
            const std::string wn = wins[w].end.to_string();
            in_stage("clustering", wn, [&] {
                const auto& r = results[w];
                const double v = negative_weight_V(decomps[w].vector(1));
                Json part = to_json(r.partition, entities);
                part["iterations"] = r.iterations;
                part["min_gain"] = min_gain;
                part["modularity"] = modularity(per[w].p.values, r.partition);
                part["V"] = v;
                Json attributions = Json::array();
                for (const auto& cl : r.partition.clusters) {
                    const auto g = information_ratio(per[w].c.values, decomps[w], cl);
                    attributions.push_back(g ? to_json(assign_symbol(*g, v, config.v_threshold)) : Json(nullptr));
                }
                part["attribution"] = attributions;
                out.json("windows/" + wn + "/partition.json", part);

                Ordering ord;
                ord.permutation = r.order;
                ord.cost = r.order_cost;
                ord.seed = derive_seed(seed, {hash_tag("consensus"), static_cast<std::uint64_t>(wins[w].end.ordinal())});
                ord.schedule = config.schedule;
                ord.restarts = config.restarts;
                out.json("windows/" + wn + "/ordering.json", to_json(ord, entities));
                if (config.write_matrices) {
                    auto a = out.open("windows/" + wn + "/affinity.csv");
                    write_matrix_csv(a, entities, r.affinity.values);
                }
                partitions.push_back(r.partition);
            });
        }
        in_stage("tracking", "", [&] {
            const auto timeline = color_timeline(partitions, config.tracking);
            out.json("timeline.json", timeline_json(timeline, entities));
        });
    }

    RunManifest manifest;
    manifest.directory = dir;
    manifest.files = out.files();
    Json windows_json = Json::array();
    for (const auto& w : wins) windows_json.push_back(w.end.to_string());
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    manifest.document = Json{{"tool", "spatiocorr"},
                             {"version", kVersion},
                             {"created", utc_stamp(now, "%Y-%m-%dT%H:%M:%SZ")},
                             {"wall_seconds", wall},
                             {"seed", seed},
                             {"stages", stage_list(stages)},
                             {"config", config.to_json()},
                             {"entities", entities},
                             {"windows", windows_json},
                             {"files", manifest.files}};
    std::ofstream mf(dir / "manifest.json", std::ios::binary);
    if (!mf) throw StageError("output", "", "cannot write manifest.json");
    mf << manifest.document.dump(2) << '\n';
    return manifest;
}

RunManifest load_manifest(const fs::path& run_dir) {
    RunManifest m;
    m.directory = run_dir;
    m.document = read_json(run_dir / "manifest.json");
    if (!m.document.contains("files") || !m.document.contains("windows") || !m.document.contains("stages"))
        throw Error("incomplete run: manifest.json lacks required fields");
    m.files = m.document["files"].get<std::vector<std::string>>();
    return m;
}

std::vector<std::string> report(const fs::path& run_dir) {
    RunManifest m = load_manifest(run_dir);
    const auto stages = m.document["stages"].get<std::string>();
    for (const char* s : {"analyze", "regimes", "cluster"})
        if (stages.find(s) == std::string::npos) throw Error(std::string("incomplete run: stage '") + s + "' was not run");
    for (const auto& f : m.files)
        if (!fs::exists(run_dir / f)) throw Error("incomplete run: listed file " + f + " is missing");

    const auto windows = m.document["windows"].get<std::vector<std::string>>();
    const auto entities = m.document["entities"].get<std::vector<std::string>>();
    std::vector<Json> spectra;
    for (const auto& w : windows) spectra.push_back(read_json(run_dir / "windows" / w / "spectrum.json"));

    ArtifactWriter out(run_dir);
    {
        auto f = out.open("report/fig1a_mean_correlation.csv");
        f << "window,mean,stddev,critical_value\n";
        for (std::size_t i = 0; i < windows.size(); ++i) {
            const auto& mc = spectra[i]["mean_correlation"];
            f << windows[i] << ',' << format_number(mc["mean"].get<double>()) << ','
              << format_number(mc["stddev"].get<double>()) << ',' << format_number(mc["critical_value"].get<double>())
              << '\n';
        }
    }
    {
        auto f = out.open("report/fig1b_eigenvalues.csv");
        const std::size_t k = std::min<std::size_t>(5, entities.size());
        f << "window";
        for (std::size_t n = 1; n <= k; ++n) f << ",lambda" << n;
        f << ",lambda_max,lambda_5pct\n";
        for (std::size_t i = 0; i < windows.size(); ++i) {
            f << windows[i];
            for (std::size_t n = 0; n < k; ++n) f << ',' << format_number(spectra[i]["eigenvalues"][n].get<double>());
            f << ',' << format_number(spectra[i]["mp"]["lambda_max"].get<double>()) << ','
              << format_number(spectra[i]["null"]["lambda_5pct"].get<double>()) << '\n';
        }
    }
    {
        auto f = out.open("report/fig1c_absorption.csv");
        const std::size_t k = spectra.empty() ? 0 : spectra[0]["absorption"].size();
        f << "window";
        for (std::size_t n = 1; n <= k; ++n) f << ",E" << n;
        f << '\n';
        for (std::size_t i = 0; i < windows.size(); ++i) {
            f << windows[i];
            for (std::size_t n = 0; n < k; ++n) f << ',' << format_number(spectra[i]["absorption"][n].get<double>());
            f << '\n';
        }
    }
    {
        const Json regimes = read_json(run_dir / "regimes.json");
        const auto selected = regimes["selected"].get<std::string>();
        std::map<std::pair<std::string, std::size_t>, double> flagged;
        for (const auto& s : regimes[selected]["shifts"])
            for (const auto& fl : s["flags"])
                flagged[{s["after"].get<std::string>(), fl["n"].get<std::size_t>()}] = fl["magnitude"].get<double>();

        std::ifstream in(run_dir / "market_effect.csv");
        if (!in) throw Error("incomplete run: missing market_effect.csv");
        auto f = out.open("report/fig2_market_effect.csv");
        f << "window,n,k_ols,k_robust,shift_flag,shift_magnitude\n";
        std::string line;
        std::getline(in, line);
        while (std::getline(in, line)) {
            const auto cells = split_csv_line(line);
            if (cells.size() < 4) throw Error("market_effect.csv: malformed row '" + line + "'");
            const auto it = flagged.find({cells[0], std::stoul(cells[1])});
            f << cells[0] << ',' << cells[1] << ',' << cells[2] << ',' << cells[3] << ','
              << (it == flagged.end() ? 0 : 1) << ',' << (it == flagged.end() ? std::string() : format_number(it->second))
              << '\n';
        }
    }
    {
        auto f = out.open("report/fig3_eigenvectors.csv");
        f << "window,n,entity,component\n";
        for (std::size_t i = 0; i < windows.size(); ++i) {
            const auto& vecs = spectra[i]["eigenvectors"];
            for (std::size_t n = 0; n < vecs.size(); ++n)
                for (std::size_t e = 0; e < entities.size(); ++e)
                    f << windows[i] << ',' << n + 1 << ',' << entities[e] << ','
                      << format_number(vecs[n][e].get<double>()) << '\n';
        }
    }
    {
        const Json timeline = read_json(run_dir / "timeline.json");
        auto f = out.open("report/fig5e_cluster_timeline.csv");
        f << "window,entity,label,color\n";
        const auto& palette = timeline["palette"];
        for (const auto& w : timeline["windows"]) {
            const auto labels = w["labels"].get<std::vector<int>>();
            for (std::size_t e = 0; e < labels.size(); ++e) {
                const std::string key = std::to_string(labels[e]);
                f << w["window"].get<std::string>() << ',' << entities[e] << ',' << labels[e] << ','
                  << (labels[e] == 0 ? std::string("none") : palette.value(key, std::string())) << '\n';
            }
        }
    }

    const auto added = out.files();
    auto all = m.files;
    for (const auto& f : added)
        if (std::find(all.begin(), all.end(), f) == all.end()) all.push_back(f);
    std::sort(all.begin(), all.end());
    m.document["files"] = all;
    std::ofstream mf(run_dir / "manifest.json", std::ios::binary);
    if (!mf) throw Error("cannot update manifest.json");
    mf << m.document.dump(2) << '\n';
    return added;
}

} // namespace spatiocorr
