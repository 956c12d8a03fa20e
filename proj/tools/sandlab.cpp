#include "sandlab/cli.hpp"

int main(int argc, char** argv) { return sandlab::cli::run(argc, argv); }
