// Entry point: subcommand dispatch, JSON configuration and run manifests.

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "common.hpp"

#ifndef SQHARDNET_VERSION
#define SQHARDNET_VERSION "unknown"
#endif

namespace sqcli {

void write_text(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

std::string output_in(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  return (std::filesystem::path(dir) / name).string();
}

std::string require(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
  return value;
}

nlohmann::json read_json_object(const std::string& path,
                                const std::vector<std::string>& allowed) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(path + ": " + e.what());
  }
  if (!j.is_object()) throw UsageError(path + ": expected a JSON object");
  if (!allowed.empty())
    for (const auto& item : j.items())
      if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end())
        throw UsageError(path + ": unknown key '" + item.key() + "'");
  return j;
}

namespace {

std::string command_path(const CLI::App* app) {
  std::vector<std::string> names;
  for (const CLI::App* a = app; a && a->get_parent(); a = a->get_parent())
    names.push_back(a->get_name());
  std::reverse(names.begin(), names.end());
  std::string out;
  for (const auto& n : names) out += (out.empty() ? "" : " ") + n;
  return out;
}

CLI::Option* find_option(CLI::App* app, const std::string& key) {
  std::string name = key;
  std::replace(name.begin(), name.end(), '_', '-');
  if (auto* opt = app->get_option_no_throw("--" + name)) return opt;
  if (auto* opt = app->get_option_no_throw(name)) return opt->nonpositional() ? nullptr : opt;
  return nullptr;
}

std::string json_to_arg(const nlohmann::json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  throw UsageError("config key '" + key + "' must be a string, number or boolean");
}

// Typed manifest value from CLI11's textual result.
nlohmann::json typed_value(const CLI::Option* opt, const std::string& text) {
  const std::string type = opt->get_type_name();
  if (type == "INT" || type == "UINT") {
    long long v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec == std::errc{} && p == text.data() + text.size()) return v;
  } else if (type == "FLOAT") {
    double v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec == std::errc{} && p == text.data() + text.size()) return v;
  } else if (type == "BOOLEAN") {
    if (text == "true" || text == "1") return true;
    if (text == "false" || text == "0") return false;
  }
  return text;
}

nlohmann::json resolved_config(const CLI::App* app) {
  nlohmann::json cfg = nlohmann::json::object();
  for (const CLI::Option* opt : app->get_options()) {
    std::string key = opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames().front();
    if (key == "help" || key == "manifest" || key.empty()) continue;
    std::string text;
    if (opt->count() > 0) {
      const auto& r = opt->results();
      for (std::size_t i = 0; i < r.size(); ++i) text += (i ? "," : "") + r[i];
    } else {
      text = opt->get_default_str();
    }
    cfg[key] = typed_value(opt, text);
  }
  return cfg;
}

std::string manifest_path(const Command& cmd) {
  if (!cmd.manifest->empty()) return *cmd.manifest;
  if (cmd.out && !cmd.out->empty()) {
    if (cmd.output == OutputKind::directory)
      return output_in(*cmd.out, "manifest.json");
    if (cmd.output == OutputKind::file) return *cmd.out + ".manifest.json";
  }
  std::string name = command_path(cmd.app);
  std::replace(name.begin(), name.end(), ' ', '-');
  return "sqhardnet-" + name + "-manifest.json";
}

// Leading tokens that name nested subcommands.
CLI::App* walk(CLI::App& root, const std::vector<std::string>& args, std::size_t& used) {
  CLI::App* cur = &root;
  used = 0;
  while (used < args.size()) {
    const auto& tok = args[used];
    if (tok.empty() || tok[0] == '-') break;
    CLI::App* next = nullptr;
    for (CLI::App* sub : cur->get_subcommands([](CLI::App*) { return true; }))
      if (sub->get_name() == tok) next = sub;
    if (!next) break;
    cur = next;
    ++used;
  }
  return cur;
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  return out;
}

/**
 * Expands `--config file.json` into flags placed before the explicit ones,
 * so the command line overrides the file. The file is either a flat object
 * of flag values or a manifest written by a previous run.
 */
std::vector<std::string> expand_config(CLI::App& root, std::vector<std::string> args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a file");
      config_path = args[i + 1];
      args.erase(args.begin() + static_cast<long>(i), args.begin() + static_cast<long>(i) + 2);
      break;
    }
    if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
      args.erase(args.begin() + static_cast<long>(i));
      break;
    }
  }
  if (config_path.empty()) return args;

  nlohmann::json j = read_json_object(config_path);
  if (j.contains("subcommand") && j.contains("config")) {
    const auto path = split_words(j["subcommand"].get<std::string>());
    std::size_t used = 0;
    walk(root, args, used);
    if (used == 0)
      args.insert(args.begin(), path.begin(), path.end());
    else if (std::vector<std::string>(args.begin(), args.begin() + static_cast<long>(used)) != path)
      throw UsageError("manifest was written by '" + j["subcommand"].get<std::string>() + "'");
    j = j["config"];
    if (!j.is_object()) throw UsageError(config_path + ": 'config' must be an object");
  }

  std::size_t used = 0;
  CLI::App* leaf = walk(root, args, used);
  if (leaf == &root) throw UsageError("--config needs a subcommand");
  std::vector<std::string> positional;
  std::vector<std::string> flags;
  const bool cli_has_positional = used < args.size() && !args[used].empty() && args[used][0] != '-';
  for (const auto& item : j.items()) {
    CLI::Option* opt = find_option(leaf, item.key());
    if (!opt) throw UsageError(config_path + ": unknown key '" + item.key() + "'");
    if (item.key() == "manifest") continue;
    const std::string value = json_to_arg(item.value(), item.key());
    if (opt->get_lnames().empty()) {
      if (!cli_has_positional) positional.push_back(value);
    } else {
      flags.push_back("--" + opt->get_lnames().front());
      flags.push_back(value);
    }
  }
  std::vector<std::string> out(args.begin(), args.begin() + static_cast<long>(used));
  out.insert(out.end(), positional.begin(), positional.end());
  out.insert(out.end(), flags.begin(), flags.end());
  out.insert(out.end(), args.begin() + static_cast<long>(used), args.end());
  return out;
}

}  // namespace
}  // namespace sqcli

int main(int argc, char** argv) {
  using namespace sqcli;
  CLI::App app{"Orthogonal hard family of one-layer networks: construction, "
               "verification, SQ games and training experiments",
               "sqhardnet"};
  app.set_version_flag("--version", SQHARDNET_VERSION);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default()->multi_option_policy(
      CLI::MultiOptionPolicy::TakeLast);
  app.footer("A JSON file given with --config supplies flag values (keys are flag "
             "names); explicit flags override it. Every run writes a manifest that "
             "can be passed back with --config.");

  Registry reg;
  register_hermite(app, reg);
  register_data(app, reg);
  register_verify(app, reg);
  register_bounds(app, reg);
  register_sq(app, reg);
  register_train(app, reg);

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    if (!args.empty() && !args[0].empty() && args[0][0] != '-') {
      std::size_t used = 0;
      walk(app, args, used);
      if (used == 0) throw UsageError("unknown subcommand '" + args[0] + "'");
    }
    args = expand_config(app, args);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  CLI::App* leaf = &app;
  while (true) {
    const auto subs = leaf->get_subcommands();
    if (subs.empty()) break;
    leaf = subs.front();
  }
  Command* cmd = reg.find(leaf);
  if (!cmd) {
    std::cerr << "error: '" << command_path(leaf) << "' needs a subcommand\n\n" << leaf->help();
    return kExitUsage;
  }

  try {
    nlohmann::json manifest;
    manifest["tool"] = "sqhardnet";
    manifest["version"] = SQHARDNET_VERSION;
    manifest["subcommand"] = command_path(leaf);
    manifest["config"] = resolved_config(leaf);
    write_text(manifest_path(*cmd), manifest.dump(2) + "\n");
    return cmd->run();
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << leaf->help();
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
}
