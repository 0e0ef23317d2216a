#include "qhydro/cli.hpp"

int main(int argc, char** argv) { return qhydro::cli::run(argc, argv); }
