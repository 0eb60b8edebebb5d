from gridsolve.cli import main

raise SystemExit(main())
