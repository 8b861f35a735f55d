#pragma once

#include <iosfwd>
#include <string>

#include "nasx/study.h"

namespace nasx {

// Parsed study file. Paths are resolved relative to the file's directory.
struct StudyFile {
  std::string space_path;
  std::string output_dir = "nasx-out";
  StudyConfig config;
};

// Throws SyntaxError / SchemaError on a malformed file.
StudyFile parse_study_file(const std::string& yaml_text,
                           const std::string& base_dir = ".");
StudyFile load_study_file(const std::string& path);

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitOther = 1;
inline constexpr int kExitInvalid = 2;
inline constexpr int kExitNoCompleteTrial = 3;
inline constexpr int kExitCapability = 4;

// `nasx <inspect|explore|emit> ...`. Reports go to `out`, logs to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace nasx
