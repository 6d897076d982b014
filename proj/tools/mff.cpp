#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "mff/commands.hpp"

namespace {

int fail(const std::string& msg, int code) {
  std::cerr << "error: " << msg << "\n";
  return code;
}

bool write_file(const std::string& path, const std::string& data) {
  std::ofstream f(path, std::ios::binary);
  if (!f) return false;
  f << data;
  return f.good();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"inhomogeneous multinomial measures and their multifractal spectra"};
  app.require_subcommand(1);

  std::string config_path, out_path, svg_path;
  std::uint64_t seed = 0;
  unsigned workers = 0;

  struct SubDesc {
    const char* name;
    const char* help;
  };
  const std::vector<SubDesc> subs{
      {"tau", "scaling exponents on a q grid (CSV)"},
      {"spectrum", "multifractal spectrum on an alpha grid (CSV, optional SVG)"},
      {"verify", "internal consistency report (JSON; exit 2 on failure)"},
      {"sample", "local exponent traces along sampled words (CSV)"},
      {"project", "point queries on the projected measure (CSV)"},
  };
  for (const SubDesc& d : subs) {
    CLI::App* sub = app.add_subcommand(d.name, d.help);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_path, "write the report here instead of stdout");
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--workers", workers, "override the config worker count");
    if (std::string(d.name) == "spectrum")
      sub->add_option("--svg", svg_path, "also write an SVG plot here");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();

  std::string text;
  {
    std::ifstream f(config_path, std::ios::binary);
    if (!f) return fail("cannot read config " + config_path, 1);
    std::ostringstream ss;
    ss << f.rdbuf();
    text = ss.str();
  }

  std::optional<mff::RunConfig> cfg;
  try {
    cfg = mff::parse_config_text(text);
  } catch (const std::exception& e) {
    return fail(e.what(), 1);
  }
  if (sub->count("--seed")) cfg->seed = seed;
  if (sub->count("--workers")) {
    if (workers < 1) return fail("workers: must be >= 1", 1);
    cfg->workers = workers;
  }
  if (!cfg->schedule.warning().empty())
    std::cerr << "warning: " << cfg->schedule.warning() << "\n";

  std::string err;
  mff::CommandResult res = mff::run_command_guarded(name, *cfg, !svg_path.empty(), &err);
  if (res.exit_code == 1 || res.exit_code == 3) return fail(err, res.exit_code);

  if (out_path.empty()) {
    std::cout << res.out;
  } else if (!write_file(out_path, res.out)) {
    return fail("cannot write " + out_path, 1);
  }
  if (!svg_path.empty() && !res.svg.empty() && !write_file(svg_path, res.svg))
    return fail("cannot write " + svg_path, 1);

  if (res.exit_code == 2) std::cerr << "verification failed\n";
  return res.exit_code;
}
