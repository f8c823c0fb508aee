from ztcm.cli import main

raise SystemExit(main())
