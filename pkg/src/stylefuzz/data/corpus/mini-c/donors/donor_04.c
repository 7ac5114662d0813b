int donor_4(int n) {
    int a[16];
    int b[16];
    int acc = 0;
    int t = 1;
    int k = 0;
    k += acc - t;
    for (int i1 = 0; i1 < 16; i1++) { acc += a[i1] * 1; t += b[i1] - acc; }
    k = t - 7;
    return acc + t;
}
