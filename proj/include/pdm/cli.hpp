#pragma once
// The pdmkit front end. Commands live here so tests can drive them in-process;
// tools/pdmkit.cpp only forwards argv.

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "pdm/config.hpp"
#include "pdm/vibration.hpp"

namespace pdm::cli {

config::Config generate_defaults();
config::Config detect_defaults();
config::Config classify_defaults();

/// One "file ..." line of a bundle manifest.
struct ManifestEntry {
    std::string path;  // relative to the bundle directory
    std::map<std::string, std::string> attrs;
};
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& bundle_dir);
RawRecording load_recording(const std::filesystem::path& bundle_dir, const ManifestEntry& entry);

/// Each command writes its outputs plus "<command>_config.ini" under paths.out.
void cmd_generate(const config::Config& cfg, std::ostream& log);
/// Returns the exit code: nonzero only when every series failed.
int cmd_detect(const config::Config& cfg, std::ostream& log);
void cmd_classify(const config::Config& cfg, std::ostream& log);
void cmd_inspect(const std::filesystem::path& artifact, std::ostream& out);

/// 0 success, 1 usage or config, 2 data, 3 numeric or training failure.
int exit_code_for(const std::exception& e);

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pdm::cli
