#pragma once

namespace pufm::cli {

// Parses argv, dispatches to the subcommands, and maps failures to the
// documented exit codes: 0 success, 2 config error, 3 data/file error,
// 4 numerical failure.
int run(int argc, char** argv);

}  // namespace pufm::cli
