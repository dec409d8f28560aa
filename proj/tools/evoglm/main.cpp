#include <exception>
#include <iostream>

#include "common.hpp"
#include "evoglm/error.hpp"

namespace evoglm::cli {

int dispatch(const Args& args) {
  CLI::App app{"Multivariate evolutionary GLM claims reserving", "evoglm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", EVOGLM_VERSION);

  Action action;
  add_simulate(app, args, action);
  add_explore(app, args, action);
  add_fit_pf(app, args, action);
  add_fit_kf(app, args, action);
  add_forecast(app, args, action);
  add_diagnose(app, args, action);
  add_reproduce(app, args, action);
  add_replay(app, args, action);

  try {
    Args reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    return action();
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace evoglm::cli

int main(int argc, char** argv) {
  return evoglm::cli::dispatch(evoglm::cli::Args(argv + 1, argv + argc));
}
