// seqlab: experiment runner for the semi-supervised training lab.
//
//   seqlab run --config exp.cfg [--out DIR] [--seed-override S]
//   seqlab compare DIR_A DIR_B
//   seqlab plot metrics.csv --kind loss --out plot.svg
//   seqlab augment-preview in.ppm --policy strong --out out.ppm [--seed-override S]

#include <cstdio>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "seqlab/augment.hpp"
#include "seqlab/errors.hpp"
#include "seqlab/experiment.hpp"
#include "seqlab/image.hpp"
#include "seqlab/plot.hpp"

namespace {

int cmd_run(const std::string& config_path, const std::string& out_override,
            const std::optional<std::uint64_t>& seed_override) {
    auto cfg = seqlab::experiment::parse_config_file(config_path);
    if (!out_override.empty()) cfg.out_dir = out_override;
    if (seed_override) cfg.seeds = {*seed_override};
    const auto result = seqlab::experiment::run_experiment(cfg);
    for (const auto& s : result.summary)
        std::printf("%-20s mean=%.6g std=%.4g\n", s.metric.c_str(), s.mean, s.stddev);
    std::printf("wrote %s\n", (cfg.out_dir / "summary.csv").string().c_str());
    return 0;
}

int cmd_compare(const std::string& dir_a, const std::string& dir_b) {
    const auto report = seqlab::experiment::compare_dirs(dir_a, dir_b);
    std::fputs(report.render().c_str(), stdout);
    return 0;
}

int cmd_plot(const std::string& csv, const std::string& kind, const std::string& out) {
    seqlab::plot::plot_to_file(csv, seqlab::plot::parse_plot_kind(kind), out);
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

int cmd_augment_preview(const std::string& in_path, const std::string& policy_name,
                        const std::string& out_path, std::uint64_t seed) {
    const seqlab::Image img = seqlab::read_pnm(in_path);
    seqlab::aug::AugmentPolicy policy = seqlab::aug::AugmentPolicy::weak();
    if (policy_name == "medium")
        policy = seqlab::aug::AugmentPolicy::medium();
    else if (policy_name == "strong")
        policy = seqlab::aug::AugmentPolicy::strong();
    else if (policy_name != "weak")
        throw seqlab::ParameterError("policy must be weak, medium or strong");
    seqlab::RngStream rng(seed);
    seqlab::write_pnm(seqlab::aug::augment(img, policy, rng), out_path);
    std::printf("wrote %s\n", out_path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"seqlab: semi-supervised learning lab"};
    app.require_subcommand(1);

    std::string config_path, out_path, kind = "loss", policy = "weak";
    std::string dir_a, dir_b, csv_path, image_path;
    std::optional<std::uint64_t> seed_override;

    auto* run = app.add_subcommand("run", "run an experiment config across its seeds");
    run->add_option("--config", config_path, "experiment config file")->required();
    run->add_option("--out", out_path, "output directory override");
    run->add_option("--seed-override", seed_override, "run a single seed instead of run.seeds");

    auto* compare = app.add_subcommand("compare", "compare two run directories");
    compare->add_option("dir_a", dir_a, "first run directory")->required();
    compare->add_option("dir_b", dir_b, "second run directory")->required();

    auto* plot = app.add_subcommand("plot", "render a metrics or reliability CSV as SVG");
    plot->add_option("csv", csv_path, "input CSV")->required();
    plot->add_option("--kind", kind, "loss | accuracy | mask | reliability")->required();
    plot->add_option("--out", out_path, "output SVG path")->required();

    auto* preview = app.add_subcommand("augment-preview", "apply an augmentation policy to an image");
    preview->add_option("image", image_path, "input PGM/PPM image")->required();
    preview->add_option("--policy", policy, "weak | medium | strong");
    preview->add_option("--out", out_path, "output image path")->required();
    preview->add_option("--seed-override", seed_override, "rng seed (default 0)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_path, seed_override);
        if (compare->parsed()) return cmd_compare(dir_a, dir_b);
        if (plot->parsed()) return cmd_plot(csv_path, kind, out_path);
        if (preview->parsed())
            return cmd_augment_preview(image_path, policy, out_path,
                                       seed_override.value_or(0));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
