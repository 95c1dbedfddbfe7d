#include "run.hpp"

int main(int argc, char** argv) { return splitroa::cli::main(argc, argv); }
