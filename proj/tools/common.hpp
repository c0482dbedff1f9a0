#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace sqcli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class OutputKind { none, file, directory };

/// A leaf subcommand: its CLI11 node, the run callback, and where its
/// --out flag points (used to place the manifest).
struct Command {
  CLI::App* app = nullptr;
  std::function<int()> run;
  OutputKind output = OutputKind::none;
  std::string* out = nullptr;
  std::string* manifest = nullptr;
};

class Registry {
 public:
  Command& add(CLI::App* app, OutputKind output, std::string* out) {
    auto cmd = std::make_unique<Command>();
    cmd->app = app;
    cmd->output = output;
    cmd->out = out;
    manifests_.push_back(std::make_unique<std::string>());
    cmd->manifest = manifests_.back().get();
    app->add_option("--manifest", *cmd->manifest,
                    "Manifest path (default: next to --out, or "
                    "sqhardnet-<command>-manifest.json)");
    commands_.push_back(std::move(cmd));
    return *commands_.back();
  }

  Command* find(const CLI::App* app) {
    for (auto& c : commands_)
      if (c->app == app) return c.get();
    return nullptr;
  }

 private:
  std::vector<std::unique_ptr<Command>> commands_;
  std::vector<std::unique_ptr<std::string>> manifests_;
};

void register_hermite(CLI::App& root, Registry& reg);
void register_data(CLI::App& root, Registry& reg);
void register_verify(CLI::App& root, Registry& reg);
void register_bounds(CLI::App& root, Registry& reg);
void register_sq(CLI::App& root, Registry& reg);
void register_train(CLI::App& root, Registry& reg);

/// Writes text to a file, creating parent directories.
void write_text(const std::string& path, const std::string& text);

/// Creates `dir` if needed and returns dir/name.
std::string output_in(const std::string& dir, const std::string& name);

std::string require(const std::string& value, const char* flag);

/// Reads a JSON file and rejects any key outside `allowed`.
nlohmann::json read_json_object(const std::string& path,
                                const std::vector<std::string>& allowed = {});

}  // namespace sqcli
