#include "ddisac/bench/cli.hpp"

int main(int argc, char** argv) { return ddisac::bench::cli(argc, argv); }
