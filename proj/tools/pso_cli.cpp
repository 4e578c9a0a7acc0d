#include "pso_cli.hpp"

int main(int argc, char** argv)
{
    return pso::cli::run_cli(argc, argv);
}
