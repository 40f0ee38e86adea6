from mdidro.cli import main


main()
