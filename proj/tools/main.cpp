#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nudgesim/driver.hpp"
#include "nudgesim/pgm.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitFailedTrial = 3;

std::vector<double> parse_list(const std::string& csv) {
    std::vector<double> out;
    size_t pos = 0;
    while (pos <= csv.size()) {
        const size_t comma = csv.find(',', pos);
        const std::string tok = csv.substr(pos, comma == std::string::npos ? csv.size() - pos
                                                                           : comma - pos);
        if (!tok.empty()) out.push_back(std::stod(tok));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

int cmd_run(const std::string& config_path, int trials, long long seed, const std::string& out,
            int jobs, bool keep_going) {
    nudgesim::RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = nudgesim::load_config(config_path);
        if (trials > 0) cfg.trials = trials;
        if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    }

    const nudgesim::RunOutput res = nudgesim::run_many(cfg, out, jobs);
    int failed = 0;
    for (const auto& r : res.records) {
        if (r.failed) {
            ++failed;
            std::fprintf(stderr, "trial seed=%llu failed: %s\n",
                         static_cast<unsigned long long>(r.seed), r.failure.c_str());
        }
    }
    std::printf("trials=%d iou=%.4f dr50=%.4f dr75=%.4f iou_s=%.4f n_avg=%.2f\n",
                res.summary.trials, res.summary.mean_iou, res.summary.dr50, res.summary.dr75,
                res.summary.iou_s, res.summary.n_avg);
    if (failed > 0 && !keep_going) return kExitFailedTrial;
    return kExitOk;
}

int cmd_sweep(const std::string& config_path, const std::string& eps_m, const std::string& eps_a,
              int trials, long long seed, const std::string& out, int jobs, bool keep_going) {
    nudgesim::RunConfig cfg;
    std::vector<double> ms, as;
    try {
        if (!config_path.empty()) cfg = nudgesim::load_config(config_path);
        if (trials > 0) cfg.trials = trials;
        if (seed >= 0) cfg.seed = static_cast<uint64_t>(seed);
        ms = parse_list(eps_m);
        as = parse_list(eps_a);
        if (ms.empty() && as.empty()) throw std::runtime_error("empty sweep grid");
        for (double v : ms)
            if (v < 0) throw std::runtime_error("eps-m must be nonnegative");
        for (double v : as)
            if (v < 0) throw std::runtime_error("eps-a must be nonnegative");
    } catch (const std::exception& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    }

    const nudgesim::SweepTable table = nudgesim::run_sweep(cfg, ms, as, out, jobs);
    bool any_failed = false;
    for (const auto& cell : table) {
        std::printf("eps_m=%-5g eps_a=%-5g iou=%.4f dr50=%.4f dr75=%.4f\n", cell.eps_m,
                    cell.eps_a, cell.summary.mean_iou, cell.summary.dr50, cell.summary.dr75);
        if (cell.summary.failed_trials > 0) any_failed = true;
    }
    if (any_failed && !keep_going) return kExitFailedTrial;
    return kExitOk;
}

int cmd_cluster(const std::string& flow_path, double tau_d, double tau_m, double tau_a,
                int min_pts, double min_mag, int stride, const std::string& out) {
    try {
        const nudgesim::FlowField flow = nudgesim::read_flo(flow_path);
        nudgesim::ClusterParams params{tau_d, tau_m, tau_a, min_pts};
        const auto points = nudgesim::flow_to_points(flow, min_mag, stride);
        const auto assign = nudgesim::dbscan(points, params);
        const auto raw = nudgesim::masks_from_assignment(assign, points, flow.width, flow.height,
                                                         stride);
        nudgesim::LabelImage labels(flow.width, flow.height, 0);
        for (const auto& [id, pixels] : raw.masks)
            for (int idx : pixels) labels.data[idx] = static_cast<uint16_t>(id);
        nudgesim::write_pgm16(out, labels);
        std::printf("clusters=%d points=%zu\n", assign.k, points.size());
        return kExitOk;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "cluster error: %s\n", e.what());
        return kExitConfig;
    }
}

int cmd_eval(const std::string& pred_path, const std::string& gt_path, const std::string& out) {
    try {
        const nudgesim::LabelImage pred = nudgesim::read_pgm16(pred_path);
        const nudgesim::LabelImage gt = nudgesim::read_pgm16(gt_path);
        if (pred.width != gt.width || pred.height != gt.height)
            throw std::runtime_error("image sizes differ");

        // Label images in, region scoring out; no scene, so no glue merging.
        auto to_hyp = [](const nudgesim::LabelImage& img) {
            std::map<int, std::vector<int>> by_label;
            for (size_t i = 0; i < img.size(); ++i)
                if (img.data[i] != 0) by_label[img.data[i]].push_back(static_cast<int>(i));
            nudgesim::SegmentationHypothesis hyp;
            hyp.width = img.width;
            hyp.height = img.height;
            for (auto& [id, pixels] : by_label) hyp.masks.push_back({id, std::move(pixels)});
            return hyp;
        };
        const auto hyp = to_hyp(pred);
        std::vector<nudgesim::GtRegion> regions;
        for (const auto& m : to_hyp(gt).masks)
            regions.push_back({m.id, {m.id}, m.pixels});

        const auto scores = nudgesim::match_and_score(hyp, regions, 0.5);
        std::string csv = "gt_id,matched_mask,iou,success50,success75\n";
        double iou_sum = 0.0;
        int s50 = 0, s75 = 0;
        for (const auto& s : scores) {
            char line[128];
            std::snprintf(line, sizeof(line), "%d,%d,%.6f,%d,%d\n", s.gt_id, s.matched_mask_id,
                          s.best_iou, s.best_iou >= 0.5 ? 1 : 0, s.best_iou >= 0.75 ? 1 : 0);
            csv += line;
            iou_sum += s.best_iou;
            if (s.best_iou >= 0.5) ++s50;
            if (s.best_iou >= 0.75) ++s75;
        }
        if (!out.empty()) {
            std::ofstream f(out);
            f << csv;
        } else {
            std::fputs(csv.c_str(), stdout);
        }
        const double n = scores.empty() ? 1.0 : static_cast<double>(scores.size());
        std::printf("objects=%zu iou=%.4f dr50=%.4f dr75=%.4f\n", scores.size(), iou_sum / n,
                    s50 / n, s75 / n);
        return kExitOk;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "eval error: %s\n", e.what());
        return kExitConfig;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"nudgesim: interactive motion-segmentation simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out";
    int trials = -1, jobs = 2;
    long long seed = -1;
    bool keep_going = false;

    auto* run = app.add_subcommand("run", "Run seeded segmentation trials");
    run->add_option("--config", config_path, "JSON config file");
    run->add_option("--trials", trials, "Number of trials");
    run->add_option("--seed", seed, "Base seed");
    run->add_option("--out", out_dir, "Output directory");
    run->add_option("--jobs", jobs, "Worker threads");
    run->add_flag("--keep-going", keep_going, "Exit 0 even when trials fail");

    std::string eps_m = "0", eps_a = "0";
    auto* sweep = app.add_subcommand("sweep", "Noise robustness study");
    sweep->add_option("--config", config_path, "JSON config file");
    sweep->add_option("--eps-m", eps_m, "Comma list of magnitude noise bounds (%)");
    sweep->add_option("--eps-a", eps_a, "Comma list of angle noise bounds (deg)");
    sweep->add_option("--trials", trials, "Trials per cell");
    sweep->add_option("--seed", seed, "Base seed");
    sweep->add_option("--out", out_dir, "Output directory");
    sweep->add_option("--jobs", jobs, "Worker threads");
    sweep->add_flag("--keep-going", keep_going, "Exit 0 even when trials fail");

    std::string flow_path, cluster_out = "labels.pgm";
    double tau_d = 15.0, tau_m = 1.5, tau_a = 0.35, min_mag = 0.5;
    int min_pts = 10, stride = 1;
    auto* cluster = app.add_subcommand("cluster", "Cluster a .flo field into motion segments");
    cluster->add_option("--flow", flow_path, "Input .flo file")->required();
    cluster->add_option("--tau-d", tau_d, "Spatial threshold (px)");
    cluster->add_option("--tau-m", tau_m, "Magnitude threshold (px)");
    cluster->add_option("--tau-a", tau_a, "Angle threshold (rad)");
    cluster->add_option("--min-pts", min_pts, "DBSCAN core threshold");
    cluster->add_option("--min-mag", min_mag, "Magnitude floor for samples");
    cluster->add_option("--stride", stride, "Pixel subsampling stride");
    cluster->add_option("--out", cluster_out, "Output label PGM");

    std::string pred_path, gt_path, eval_out;
    auto* eval = app.add_subcommand("eval", "Score a label image against ground truth");
    eval->add_option("--pred", pred_path, "Predicted label PGM")->required();
    eval->add_option("--gt", gt_path, "Ground truth label PGM")->required();
    eval->add_option("--out", eval_out, "Per-object CSV output");

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return cmd_run(config_path, trials, seed, out_dir, jobs, keep_going);
    if (sweep->parsed())
        return cmd_sweep(config_path, eps_m, eps_a, trials, seed, out_dir, jobs, keep_going);
    if (cluster->parsed())
        return cmd_cluster(flow_path, tau_d, tau_m, tau_a, min_pts, min_mag, stride, cluster_out);
    if (eval->parsed()) return cmd_eval(pred_path, gt_path, eval_out);
    return kExitOk;
}
