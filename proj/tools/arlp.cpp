#include "arlp/cli.hpp"

int main(int argc, char** argv) { return arlp::cli::run(argc, argv); }
