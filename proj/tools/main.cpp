#include <vulnmine/cli.h>

int main(int argc, char** argv)
{
    return vulnmine::cli::run(argc, argv);
}
