// linopt: experiment sweeps for learning linear optical circuits.

#include <CLI11.hpp>

#include <linopt/experiments.hpp>

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::string out;
  std::string format = "csv";
};

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--config", c.config, "INI config file");
  sub->add_option("--seed", c.seed, "base seed (overrides the config)");
  sub->add_option("--workers", c.workers, "worker threads (default: $LINOPT_WORKERS or 1)")
      ->check(CLI::PositiveNumber);
  sub->add_option("--out", c.out, "output path (default: stdout)");
  sub->add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv", "json"}));
}

template <class Cfg, class Cmd>
int run(const Common& c, const std::string& section, Cmd cmd) {
  const linopt::Ptree root = c.config.empty() ? linopt::Ptree{} : linopt::load_config(c.config);
  Cfg cfg = linopt::read_section<Cfg>(root, section);
  if (c.seed) cfg.seed = *c.seed;
  linopt::RunOptions opt;
  opt.out = c.out;
  opt.format = c.format;
  if (c.workers) opt.workers = *c.workers;
  return cmd(cfg, opt);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Learning linear optical circuits from coherent states"};
  app.set_version_flag("--version", LINOPT_VERSION);
  app.require_subcommand(1);

  Common common;
  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {{"erm", "empirical risk minimization sweep"},
                      {"junta", "adaptive junta discovery sweep"},
                      {"bounds", "generalization-bound experiment"},
                      {"verify", "oracle and property checks"},
                      {"swap-risk", "SWAP-test risk estimates against exact risks"}};
  std::vector<CLI::App*> apps;
  for (const auto& s : subs) {
    apps.push_back(app.add_subcommand(s.name, s.help));
    add_common(apps.back(), common);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : linopt::kExitConfig;
  }

  try {
    if (apps[0]->parsed()) return run<linopt::ErmConfig>(common, "erm", linopt::cmd_erm);
    if (apps[1]->parsed()) return run<linopt::JuntaConfig>(common, "junta", linopt::cmd_junta);
    if (apps[2]->parsed()) return run<linopt::BoundsConfig>(common, "bounds", linopt::cmd_bounds);
    if (apps[3]->parsed()) return run<linopt::VerifyConfig>(common, "verify", linopt::cmd_verify);
    return run<linopt::SwapRiskConfig>(common, "swap-risk", linopt::cmd_swap_risk);
  } catch (const linopt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return linopt::kExitConfig;
  } catch (const linopt::IoError& e) {
    std::cerr << "I/O error: " << e.what() << '\n';
    return linopt::kExitIo;
  } catch (const linopt::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return linopt::kExitConfig;
  }
}
