#include "mixseg/cli.hpp"

int main(int argc, char** argv) { return mixseg::cli::run(argc, argv); }
