#pragma once

namespace memsflow {

// Entry point of the command-line tool. Exit codes: 0 success, 1 failed check
// or runtime failure, 2 usage or configuration error.
int cli_main(int argc, char** argv);

}  // namespace memsflow
