#include "pufm/cli.hpp"

int main(int argc, char** argv) { return pufm::cli::run(argc, argv); }
