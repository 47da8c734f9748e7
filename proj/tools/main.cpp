#include "igo_cli.hpp"

int main(int argc, char** argv) { return igo::cli::run(argc, argv); }
