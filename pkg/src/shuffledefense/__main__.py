from shuffledefense.cli import main

raise SystemExit(main())
