from heraldsim.cli import main

main()
