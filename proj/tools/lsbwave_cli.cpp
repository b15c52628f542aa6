#include "lsbwave/cli.hpp"

int main(int argc, char** argv) { return lsbwave::cli::run(argc, argv); }
