from slelab.cli import main

main()
