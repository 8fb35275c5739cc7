#include "petprep/cli.hpp"

int main(int argc, char **argv) { return petprep::cli::run(argc, argv); }
