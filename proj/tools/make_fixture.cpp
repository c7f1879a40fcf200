// Writes the synthetic end-to-end dataset used by the tests and the README walkthrough.

#include <CLI11.hpp>

#include <iostream>

#include "cloze/error.hpp"
#include "cloze/fixture.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate the synthetic Cloze validation dataset", "cloze_make_fixture"};
  std::string out = "data/fixture";
  cloze::fixture::Options opts;
  app.add_option("--out", out, "Output directory")->capture_default_str();
  app.add_option("--seed", opts.seed, "RNG seed")->capture_default_str();
  app.add_option("--students", opts.students, "Response sheets")->capture_default_str();
  app.add_option("--judges", opts.judges, "Judge sessions")->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  try {
    const auto d = cloze::fixture::make_dataset(opts);
    cloze::fixture::write_dataset(d, out);
    std::cout << "wrote " << d.sheets.size() << " response sheets, " << d.sessions.size()
              << " judge sessions, " << d.models.size() << " models and " << d.selected.size()
              << " selected gaps to " << out << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
