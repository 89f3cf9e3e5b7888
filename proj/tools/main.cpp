#include "memsflow/cli.hpp"

int main(int argc, char** argv) { return memsflow::cli_main(argc, argv); }
