#include <CLI11.hpp>

#include "sigpick/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Equilibria of dynamic information design games"};
  sigpick::RunConfig cfg;
  try {
    cfg = sigpick::parse_args(app, argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  return sigpick::run(cfg);
}
