#include "app.hpp"

int main(int argc, char** argv) { return cbf::app::run_cli(argc, argv); }
