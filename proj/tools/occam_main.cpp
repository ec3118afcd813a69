#include "occam/cli.hpp"

int main(int argc, char** argv) { return occam::cli::run(argc, argv); }
