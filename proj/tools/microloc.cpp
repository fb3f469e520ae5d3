#include "microloc/cli.hpp"

int main(int argc, char** argv) { return microloc::run_cli(argc, argv); }
