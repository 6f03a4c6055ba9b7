#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "rdmeta/kernels.hpp"
#include "rdmeta/tasks.hpp"

int main(int argc, char** argv) {
  CLI::App app{"rdmeta: small-noise stochastic reaction-diffusion toolkit"};
  app.require_subcommand(1);

  std::string config_path;
  rdmeta::TaskOptions opts;
  CLI::App* run = app.add_subcommand("run", "run the task named in a config file");
  run->add_option("config", config_path, "path to the experiment config")->required();
  run->add_option("--output-dir", opts.output_dir_override,
                  "override the output directory (also: RDMETA_OUTPUT_DIR)");
  run->add_option("--workers", opts.workers_override,
                  "cap worker threads (also: RDMETA_WORKERS)");

  std::string task_name;
  CLI::App* describe = app.add_subcommand("describe", "print a task's config schema and target");
  describe->add_option("task", task_name, "task name")->required();

  CLI::App* version = app.add_subcommand("version", "print the version");

  CLI11_PARSE(app, argc, argv);

  if (version->parsed()) {
    std::cout << "rdmeta " << rdmeta::kVersion << " (simd: "
              << (rdmeta::kernels::using_avx2() ? "avx2" : "scalar") << ")\n";
    return 0;
  }
  if (describe->parsed()) {
    try {
      std::cout << rdmeta::describe_task(task_name);
      return 0;
    } catch (const rdmeta::UnknownTask& e) {
      std::cerr << e.what() << "\n";
      return 1;
    }
  }
  return rdmeta::run_task(config_path, opts, std::cout, std::cerr);
}
