#include "cli.hpp"

int main(int argc, char** argv) { return ccr::cli::run(argc, argv); }
