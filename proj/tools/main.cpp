#include "cli.hpp"

int main(int argc, char** argv) { return diffreg::cli::run(argc, argv); }
