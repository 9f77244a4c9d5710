#include "spatiocorr/pipeline.hpp"
#include "spatiocorr/synth.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>

using namespace spatiocorr;

namespace {

struct Overrides {
    std::string config_file;
    std::optional<std::string> input, national, schema, cluster_map, output_dir;
    std::optional<std::size_t> window_size, null_rounds, restarts, threads, absorption_resamples, horizon;
    std::optional<std::string> null_criterion, regime_estimator, interval_split, reference_start, reference_end;
    std::optional<double> cooling, moves_per_entity, initial_temperature;
    std::optional<int> stall_temperatures, max_temperatures, max_iterations;
    std::optional<double> regime_threshold, v_threshold, min_gain, affinity_min_gain, alpha;
    std::optional<std::uint64_t> seed;
    bool no_timestamp = false;
    bool no_matrices = false;
    bool dump_null = false;
};

void add_run_options(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--config", o.config_file, "JSON run configuration; flags override its values");
    cmd->add_option("-i,--input", o.input, "Price panel CSV");
    cmd->add_option("--national", o.national, "National index levels CSV (quarter,value)");
    cmd->add_option("--schema", o.schema, "CSV schema file (key = value lines)");
    cmd->add_option("--cluster-map", o.cluster_map, "entity,cluster CSV for cluster-sampled absorption");
    cmd->add_option("-o,--output", o.output_dir, "Output directory");
    cmd->add_option("-s,--window", o.window_size, "Window size in quarters");
    cmd->add_option("--null-rounds", o.null_rounds, "Shuffled-null rounds per window");
    cmd->add_option("--null-criterion", o.null_criterion, "pooled | largest")->check(CLI::IsMember({"pooled", "largest"}));
    cmd->add_option("--restarts", o.restarts, "Seriation restarts per consensus round");
    cmd->add_option("--cooling", o.cooling, "Annealing cooling factor");
    cmd->add_option("--moves-per-entity", o.moves_per_entity, "Annealing moves per temperature, per entity");
    cmd->add_option("--initial-temperature", o.initial_temperature, "Starting temperature (<= 0: automatic)");
    cmd->add_option("--stall", o.stall_temperatures, "Temperatures without change before stopping");
    cmd->add_option("--max-temperatures", o.max_temperatures, "Temperature cap per annealing run");
    cmd->add_option("--max-iterations", o.max_iterations, "Consensus iteration cap");
    cmd->add_option("--regime-threshold", o.regime_threshold, "|dk| flag threshold");
    cmd->add_option("--regime-estimator", o.regime_estimator, "ols | robust")->check(CLI::IsMember({"ols", "robust"}));
    cmd->add_option("--v-threshold", o.v_threshold, "Negative-weight threshold excluding lambda_1");
    cmd->add_option("--min-gain", o.min_gain, "Box threshold on partial correlations");
    cmd->add_option("--affinity-min-gain", o.affinity_min_gain, "Box threshold on co-cluster frequencies");
    cmd->add_option("--alpha", o.alpha, "Significance level");
    cmd->add_option("--absorption-resamples", o.absorption_resamples, "Resamples for cluster-sampled absorption");
    cmd->add_option("--interval-split", o.interval_split, "Tracking split quarter, or 'none'");
    cmd->add_option("--reference-start", o.reference_start, "First quarter of the early-interval reference range");
    cmd->add_option("--reference-end", o.reference_end, "Last quarter of the early-interval reference range");
    cmd->add_option("--horizon", o.horizon, "Tracking look-ahead in windows");
    cmd->add_option("--seed", o.seed, "Random seed (required)");
    cmd->add_option("-j,--threads", o.threads, "Worker threads (0 = auto)");
    cmd->add_flag("--no-timestamp", o.no_timestamp, "Write directly into the output directory");
    cmd->add_flag("--no-matrices", o.no_matrices, "Skip per-window matrix CSVs");
    cmd->add_flag("--dump-null", o.dump_null, "Write pooled null eigenvalues per window");
}

RunConfig build_config(const Overrides& o) {
    RunConfig c = o.config_file.empty() ? RunConfig{} : RunConfig::from_file(o.config_file);
    if (o.input) c.input = *o.input;
    if (o.national) c.national = *o.national;
    if (o.schema) c.schema = *o.schema;
    if (o.cluster_map) c.cluster_map = *o.cluster_map;
    if (o.output_dir) c.output_dir = *o.output_dir;
    if (o.window_size) c.window_size = *o.window_size;
    if (o.null_rounds) c.null_rounds = *o.null_rounds;
    if (o.null_criterion) c.null_criterion = *o.null_criterion == "pooled" ? NullCriterion::Pooled : NullCriterion::LargestEigen;
    if (o.restarts) c.restarts = *o.restarts;
    if (o.cooling) c.schedule.cooling = *o.cooling;
    if (o.moves_per_entity) c.schedule.moves_per_entity = *o.moves_per_entity;
    if (o.initial_temperature) c.schedule.initial_temperature = *o.initial_temperature;
    if (o.stall_temperatures) c.schedule.stall_temperatures = *o.stall_temperatures;
    if (o.max_temperatures) c.schedule.max_temperatures = *o.max_temperatures;
    if (o.max_iterations) c.max_consensus_iterations = *o.max_iterations;
    if (o.regime_threshold) c.regime_threshold = *o.regime_threshold;
    if (o.regime_estimator) c.regime_estimator = *o.regime_estimator == "ols" ? Estimator::Ols : Estimator::Robust;
    if (o.v_threshold) c.v_threshold = *o.v_threshold;
    if (o.min_gain) c.min_gain = *o.min_gain;
    if (o.affinity_min_gain) c.affinity_min_gain = *o.affinity_min_gain;
    if (o.alpha) c.alpha = *o.alpha;
    if (o.absorption_resamples) c.absorption_resamples = *o.absorption_resamples;
    if (o.interval_split)
        c.tracking.interval_split = *o.interval_split == "none" ? std::nullopt : std::optional(Quarter::parse(*o.interval_split));
    if (o.reference_start) c.tracking.reference_start = Quarter::parse(*o.reference_start);
    if (o.reference_end) c.tracking.reference_end = Quarter::parse(*o.reference_end);
    if (o.horizon) c.tracking.horizon = *o.horizon;
    if (o.seed) c.seed = *o.seed;
    if (o.threads) c.threads = *o.threads;
    if (o.no_timestamp) c.timestamped = false;
    if (o.no_matrices) c.write_matrices = false;
    if (o.dump_null) c.dump_null = true;
    return c;
}

struct SynthArgs {
    std::size_t entities = 30;
    std::size_t quarters = 120;
    std::size_t clusters = 3;
    double beta = 1.0;
    double gamma = 0.8;
    double noise = 0.5;
    std::optional<double> dof;
    std::string start = "1975Q1";
    std::uint64_t seed = 0;
    std::string output = "synthetic";
};

void write_synth(const SynthArgs& a) {
    FactorModelSpec spec = FactorModelSpec::blocks(a.entities, a.quarters, a.clusters, a.beta, a.gamma, a.noise, a.seed);
    spec.student_t_dof = a.dof;
    spec.start = Quarter::parse(a.start);
    const SyntheticPanel sp = generate_factor_panel(spec);

    std::filesystem::create_directories(a.output);
    const std::filesystem::path dir(a.output);
    std::ofstream panel(dir / "panel.csv");
    write_price_csv(panel, sp.prices);

    std::ofstream national(dir / "national.csv");
    national << "quarter,value\n";
    double level = 100.0;
    national << sp.prices.quarters.front().to_string() << ',' << format_number(level) << '\n';
    for (std::size_t t = 0; t < sp.market.quarters.size(); ++t) {
        level *= std::exp(sp.market.values(static_cast<Eigen::Index>(t)));
        national << sp.market.quarters[t].to_string() << ',' << format_number(level) << '\n';
    }

    std::ofstream planted(dir / "planted.csv");
    planted << "entity,cluster\n";
    const auto membership = sp.planted.membership();
    for (std::size_t i = 0; i < membership.size(); ++i)
        planted << sp.prices.entities[i] << ',' << membership[i] << '\n';
    if (!panel || !national || !planted) throw Error("cannot write synthetic files under " + a.output);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spatiotemporal correlation analysis of regional price panels"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    Overrides ov;
    struct Verb {
        const char* name;
        const char* help;
        unsigned stages;
    };
    const Verb verbs[] = {
        {"ingest", "Validate a panel and write returns and the market series", kStageIngest},
        {"analyze", "Correlations, spectra and null tests per window", kStageIngest | kStageAnalyze},
        {"cluster", "Consensus clustering and cluster tracking per window", kStageIngest | kStageCluster},
        {"regimes", "Market effect k_n and regime shifts", kStageIngest | kStageRegimes},
        {"run", "All stages followed by the report", kStageAll},
    };
    std::vector<std::pair<CLI::App*, unsigned>> run_cmds;
    for (const auto& v : verbs) {
        auto* cmd = app.add_subcommand(v.name, v.help);
        add_run_options(cmd, ov);
        run_cmds.emplace_back(cmd, v.stages);
    }

    SynthArgs sa;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic factor-model panel");
    synth->add_option("-n,--entities", sa.entities, "Number of entities");
    synth->add_option("-t,--quarters", sa.quarters, "Number of returns");
    synth->add_option("-k,--clusters", sa.clusters, "Number of planted clusters");
    synth->add_option("--beta", sa.beta, "Market loading");
    synth->add_option("--gamma", sa.gamma, "Cluster-factor loading");
    synth->add_option("--noise", sa.noise, "Idiosyncratic noise scale");
    synth->add_option("--dof", sa.dof, "Student-t degrees of freedom (default Gaussian)");
    synth->add_option("--start", sa.start, "First quarter");
    synth->add_option("--seed", sa.seed, "Random seed")->required();
    synth->add_option("-o,--output", sa.output, "Output directory");

    std::string report_dir;
    auto* rep = app.add_subcommand("report", "Write plot-ready summary tables for a finished run");
    rep->add_option("run_dir", report_dir, "Run directory containing manifest.json")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*synth) {
            write_synth(sa);
            std::cout << "wrote " << sa.output << "/panel.csv, national.csv, planted.csv\n";
            return 0;
        }
        if (*rep) {
            for (const auto& f : report(report_dir)) std::cout << f << '\n';
            return 0;
        }
        for (const auto& [cmd, stages] : run_cmds) {
            if (!*cmd) continue;
            const RunConfig config = build_config(ov);
            const RunManifest m = run_pipeline(config, stages);
            if (stages == kStageAll) report(m.directory);
            std::cout << m.directory.string() << '\n';
            return 0;
        }
    } catch (const StageError& e) {
        std::cerr << "spatiocorr: " << e.what() << '\n';
        return 3;
    } catch (const InvalidArgument& e) {
        std::cerr << "spatiocorr: invalid argument: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "spatiocorr: error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
