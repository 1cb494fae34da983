#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>

#include "CLI11.hpp"
#include "splatfix/cli.hpp"
#include "splatfix/error.hpp"
#include "splatfix/fixer.hpp"
#include "splatfix/scheduler.hpp"

namespace fs = std::filesystem;
using namespace splatfix;

int main(int argc, char** argv) {
    CLI::App app{"Sparse-view Gaussian splatting reconstruction with fixed novel views"};
    app.require_subcommand(1);

    cli::TrainOptions train;
    std::uint64_t train_seed = 0;
    auto* c_train = app.add_subcommand("train", "Train a scene bundle");
    c_train->add_option("scene", train.scene, "Scene directory")->required();
    c_train->add_option("-o,--out", train.out, "Output directory (default <scene>/output)");
    c_train->add_option("--set", train.overrides, "Override a config key (key=value)");
    auto* seed_opt = c_train->add_option("--seed", train_seed, "Random seed");
    c_train->add_flag("-v,--verbose", train.verbose, "Report phase progress on stderr");

    fs::path r_ckpt, r_cams, r_out;
    auto* c_render = app.add_subcommand("render", "Render a checkpoint from a camera list");
    c_render->add_option("checkpoint", r_ckpt)->required();
    c_render->add_option("cameras", r_cams)->required();
    c_render->add_option("-o,--out", r_out)->required();
    std::uint64_t unused_seed = 0;
    c_render->add_option("--seed", unused_seed, "Accepted for uniformity; rendering draws no random numbers");

    fs::path e_ckpt, e_scene;
    auto* c_eval = app.add_subcommand("eval", "PSNR and SSIM on held-out cameras");
    c_eval->add_option("checkpoint", e_ckpt)->required();
    c_eval->add_option("scene", e_scene)->required();
    c_eval->add_option("--seed", unused_seed, "Accepted for uniformity; evaluation draws no random numbers");

    fs::path p_ckpt, p_cams, p_out;
    perturb::PerturbConfig pcfg;
    double delta_deg = 15.0;
    bool p_allow = false;
    auto* c_perturb = app.add_subcommand("perturb", "Render clean/perturbed image pairs");
    c_perturb->add_option("checkpoint", p_ckpt)->required();
    c_perturb->add_option("cameras", p_cams)->required();
    c_perturb->add_option("-o,--out", p_out)->required();
    c_perturb->add_option("--sigma-x", pcfg.sigma_x, "Position noise standard deviation");
    c_perturb->add_option("--delta-phi", delta_deg, "Maximum rotation angle in degrees");
    c_perturb->add_option("--seed", pcfg.seed);
    c_perturb->add_flag("--allow-out-of-range", p_allow, "Accept magnitudes outside the usual ranges");

    fs::path s_out;
    cli::SynthParams sp;
    auto* c_synth = app.add_subcommand("synth", "Write a synthetic scene bundle");
    c_synth->add_option("dir", s_out)->required();
    c_synth->add_option("--gaussians", sp.gaussians);
    c_synth->add_option("--size", sp.size);
    c_synth->add_option("--references", sp.references);
    c_synth->add_option("--novel", sp.novel);
    c_synth->add_option("--heldout", sp.heldout);
    c_synth->add_option("--seed", sp.seed);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (*c_train) {
            if (*seed_opt) {
                train.seed = train_seed;
            }
            const cli::TrainOutcome o = cli::cmd_train(train);
            std::cout << "wrote " << (o.out_dir / "checkpoint.splat").string() << "\n";
            if (!o.report.heldout_final.empty()) {
                std::cout << "held-out PSNR " << trainer::TrainReport::mean_psnr(o.report.heldout_final)
                          << " dB, SSIM " << trainer::TrainReport::mean_ssim(o.report.heldout_final) << "\n";
            }
        } else if (*c_render) {
            cli::cmd_render(r_ckpt, r_cams, r_out);
        } else if (*c_eval) {
            std::cout << cli::cmd_eval(e_ckpt, e_scene).dump(2) << "\n";
        } else if (*c_perturb) {
            pcfg.delta_phi = delta_deg * std::numbers::pi / 180.0;
            cli::cmd_perturb(p_ckpt, p_cams, p_out, pcfg, p_allow);
        } else if (*c_synth) {
            cli::cmd_synth(s_out, sp);
        }
    } catch (const UsageError& e) {
        std::cerr << "splatfix: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "splatfix: " << e.what() << "\n";
        return 2;
    } catch (const fixer::FixError& e) {
        std::cerr << "splatfix: " << e.what() << "\n";
        return 2;
    } catch (const scheduler::ScheduleStarvation& e) {
        std::cerr << "splatfix: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "splatfix: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
