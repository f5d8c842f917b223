#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "gg/cli.hpp"

namespace {

struct Options {
  std::string spec_path, out_path, format = "structured";
  double t_end = -1.0, dt = -1.0, tol = -1.0;
  std::string scheme;
  int fiber = 0;  // 1-based on the command line, 0 = unset
};

void add_common(CLI::App* cmd, Options& opt) {
  cmd->add_option("--spec", opt.spec_path, "instance file")->required();
  cmd->add_option("--out", opt.out_path, "output path (default stdout)");
  cmd->add_option("--format", opt.format, "structured|csv")
      ->check(CLI::IsMember({"structured", "csv"}));
  cmd->add_option("--tol", opt.tol, "residual tolerance override");
}

int dispatch(const std::string& command, const Options& opt) {
  gg::InstanceSpec spec = gg::load_spec(opt.spec_path);
  if (opt.t_end > 0) spec.run.t_end = opt.t_end;
  if (opt.dt > 0) spec.run.dt = opt.dt;
  if (opt.tol > 0) spec.run.tol = opt.tol;
  if (opt.fiber > 0) spec.run.fiber = opt.fiber - 1;
  if (opt.scheme == "euler") spec.run.scheme = gg::Scheme::Euler;
  if (opt.scheme == "rk4") spec.run.scheme = gg::Scheme::RK4;

  gg::Report rep = gg::run_command(spec, command);
  if (opt.out_path.empty()) {
    gg::emit_report(rep, opt.format, std::cout);
  } else {
    std::ofstream out(opt.out_path);
    if (!out) throw gg::SpecError("cannot write: " + opt.out_path);
    gg::emit_report(rep, opt.format, out);
  }
  return rep.status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"invariant generalized-geometry engine"};
  app.require_subcommand(1);

  // GGFLOW_THREADS=1 forces the dual-pair verification onto one thread
  if (const char* th = std::getenv("GGFLOW_THREADS"); th && th[0] == '1' &&
      th[1] == '\0')
    setenv("EIGEN_DONT_PARALLELIZE", "1", 0);

  std::map<std::string, Options> opts;
  for (const char* name : {"check", "ricci", "flow", "dualize",
                           "verify-duality", "killing", "strominger",
                           "grid-flow"}) {
    CLI::App* cmd = app.add_subcommand(name);
    Options& opt = opts[name];
    add_common(cmd, opt);
    if (std::string(name) == "flow" || std::string(name) == "grid-flow" ||
        std::string(name) == "verify-duality") {
      cmd->add_option("--t-end", opt.t_end, "integration time");
      cmd->add_option("--dt", opt.dt, "time step");
      cmd->add_option("--scheme", opt.scheme, "rk4|euler")
          ->check(CLI::IsMember({"rk4", "euler"}));
    }
    if (std::string(name) == "dualize" ||
        std::string(name) == "verify-duality")
      cmd->add_option("--fiber", opt.fiber, "1-based fiber direction");
  }

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    return dispatch(command, opts[command]);
  } catch (const std::exception& e) {
    std::cerr << "ggflow " << command << ": " << e.what() << "\n";
    return 1;
  }
}
