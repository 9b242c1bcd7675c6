#include "veinorigin/cli.hpp"

int main(int argc, char** argv) { return veinorigin::cli::run(argc, argv); }
