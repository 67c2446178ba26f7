#include "cohist/cli.hpp"

int main(int argc, char** argv) { return cohist::cli::run(argc, argv); }
