// Command-line front end for the batch runner.

#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "toruslab/runner.hpp"

namespace {

// -p key=value: the value is JSON when it parses as JSON, a plain string otherwise.
toruslab::Json parse_value(const std::string& text) {
  auto j = toruslab::Json::parse(text, nullptr, false);
  return j.is_discarded() ? toruslab::Json(text) : j;
}

}  // namespace

int main(int argc, char** argv) {
  using toruslab::Json;
  CLI::App app{"Affine random walks on tori: experiments and property checks"};
  app.require_subcommand(1);

  std::string config_path, out_dir, spec_text, fp_spec_text;
  std::uint64_t seed = 0;
  bool exact = false, floating = false, quiet = false;
  std::vector<std::string> overrides;

  for (const auto& name : toruslab::command_names()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " command");
    sub->add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "RNG seed");
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--spec", spec_text, "named spec or inline JSON spec");
    sub->add_option("--fp-spec", fp_spec_text, "named or inline F_p spec");
    sub->add_option("-p,--param", overrides, "parameter override key=value (repeatable)");
    auto* ex = sub->add_flag("--exact", exact, "exact rational arithmetic");
    sub->add_flag("--float", floating, "floating-point arithmetic")->excludes(ex);
    sub->add_flag("-q,--quiet", quiet, "do not print the result JSON");
  }
  CLI11_PARSE(app, argc, argv);
  const CLI::App* sub = app.get_subcommands().front();
  const std::string command = sub->get_name();

  try {
    Json config = Json::object();
    if (!config_path.empty()) {
      std::ifstream f(config_path);
      config = Json::parse(f, nullptr, false);
      if (config.is_discarded()) throw toruslab::Error(toruslab::ErrorKind::ConfigInvalid, "config is not valid JSON");
      if (config.contains("command") && config.at("command") != command)
        throw toruslab::Error(toruslab::ErrorKind::ConfigInvalid, "config command differs from subcommand");
    }
    config["command"] = command;
    if (sub->count("--seed")) config["seed"] = seed;
    if (!out_dir.empty()) config["out"] = out_dir;
    if (!spec_text.empty()) config["spec"] = parse_value(spec_text);
    if (!fp_spec_text.empty()) config["fp_spec"] = parse_value(fp_spec_text);
    if (exact) config["arithmetic"] = "exact";
    if (floating) config["arithmetic"] = "float";
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos || eq == 0)
        throw toruslab::Error(toruslab::ErrorKind::ConfigInvalid, "parameter override must be key=value: " + kv);
      config["params"][kv.substr(0, eq)] = parse_value(kv.substr(eq + 1));
    }

    toruslab::RunRecord rec = toruslab::run(config);
    if (command == "verify-all") std::cout << rec.outputs.at("acceptance.txt");
    if (!quiet) {
      Json shown = rec.result;
      shown["verdicts"] = rec.verdicts;
      if (command != "verify-all") std::cout << shown.dump(2) << "\n";
    }
    if (!rec.ok) {
      std::cerr << "assertion failure in " << command << "\n";
      return 1;
    }
    return 0;
  } catch (const toruslab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == toruslab::ErrorKind::ConfigInvalid ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
