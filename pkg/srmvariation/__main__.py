from srmvariation.cli import main

raise SystemExit(main())
