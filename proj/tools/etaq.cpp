#include "etaq/cli.hpp"

int main(int argc, char** argv) { return etaq::cli::run(argc, argv); }
