#include "wginvis/cli.hpp"

int main(int argc, char** argv) { return wginvis::run_cli(argc, argv); }
