#include "pdeinv/cli.hpp"

int main(int argc, char** argv) { return pdeinv::cli::run(argc, argv); }
