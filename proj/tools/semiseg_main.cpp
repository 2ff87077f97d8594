#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"

#include "semiseg/cli/commands.hpp"
#include "semiseg/core/error.hpp"

namespace {

void add_config_options(CLI::App* cmd, semiseg::CommandSpec& spec) {
    cmd->add_option("-c,--config", spec.config_path, "INI config file")
        ->check(CLI::ExistingFile);
    cmd->add_option("-s,--set", spec.overrides,
                    "override one config key as section.key=value (repeatable)");
    cmd->add_flag_callback(
        "--help-config",
        [] {
            std::printf("%s", semiseg::config_help().c_str());
            std::exit(0);
        },
        "print every config key with type and default");
    cmd->footer("Config keys:\n" + semiseg::config_help());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"semi-supervised semantic segmentation with zero-shot pseudo-labels"};
    app.require_subcommand(1);

    semiseg::CommandSpec spec;
    int workers = 1;
    bool overwrite = false;
    bool resume = false;
    bool annotate_first = false;
    std::string checkpoint;
    std::string mask_dump_dir;
    std::string run_dir;

    CLI::App* make_splits =
        app.add_subcommand("make-splits", "partition the train pool into labeled/unlabeled ids");
    add_config_options(make_splits, spec);

    CLI::App* annotate =
        app.add_subcommand("annotate", "write zero-shot pseudo-labels for the unlabeled split");
    add_config_options(annotate, spec);
    annotate->add_option("-j,--workers", workers, "annotation worker threads")
        ->check(CLI::PositiveNumber);
    annotate->add_flag("--overwrite", overwrite, "re-annotate ids already in the store");

    CLI::App* train = app.add_subcommand("train", "run the training loop");
    add_config_options(train, spec);
    train->add_flag("--resume", resume, "continue from <out_dir>/last.ckpt");
    train->add_flag("--annotate-first", annotate_first,
                    "run annotation before training (semi mode)");
    train->add_option("-j,--workers", workers, "worker threads for --annotate-first")
        ->check(CLI::PositiveNumber);

    CLI::App* eval = app.add_subcommand("eval", "per-class IoU and mIoU on the val ids");
    add_config_options(eval, spec);
    eval->add_option("--checkpoint", checkpoint,
                     "checkpoint to evaluate (default <out_dir>/best.ckpt)");
    eval->add_option("--dump-masks", mask_dump_dir, "write predicted masks as PNGs here");

    CLI::App* report = app.add_subcommand("report", "summarize a finished run directory");
    report->add_option("run_dir", run_dir, "train.out_dir of the run")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& ex) {
        const int code = app.exit(ex);
        return code == 0 ? 0 : 2; // bad flags are config errors
    }

    try {
        if (report->parsed()) {
            semiseg::cmd_report(run_dir);
            return 0;
        }
        const semiseg::TrainConfig config = semiseg::resolve_config(spec);
        if (make_splits->parsed()) {
            semiseg::cmd_make_splits(config);
        } else if (annotate->parsed()) {
            semiseg::cmd_annotate(config, workers, overwrite);
        } else if (train->parsed()) {
            semiseg::cmd_train(config, resume, annotate_first, workers);
        } else if (eval->parsed()) {
            semiseg::cmd_eval(config, checkpoint, mask_dump_dir);
        }
        return 0;
    } catch (const semiseg::Error& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return ex.exit_code();
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
}
